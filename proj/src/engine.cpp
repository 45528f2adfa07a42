#include "w4a16/engine.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "w4a16/util.hpp"

namespace w4a16 {

void validate(const SplitKPlan& plan) {
    auto tile_ok = [](uint32_t t) { return t > 0 && t % 16 == 0; };
    if (!tile_ok(plan.tile_m) || !tile_ok(plan.tile_n) || !tile_ok(plan.tile_k)) {
        throw ShapeError("plan tiles must be positive multiples of 16");
    }
    if (plan.split < 1) throw ShapeError("plan split factor must be >= 1");
    if (plan.num_ai_cores < 1 || plan.vec_per_core < 1) {
        throw ShapeError("plan core counts must be >= 1");
    }
}

Fp16Matrix pad_batch(const Fp16Matrix& a, uint32_t m_tile) {
    if (m_tile == 0 || m_tile % 16 != 0) {
        throw ShapeError("pad_batch: tile must be a positive multiple of 16");
    }
    const uint32_t padded = ceil_div(a.rows, m_tile) * m_tile;
    if (padded == a.rows) return a;
    Fp16Matrix out(padded, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    return out;
}

Fp16Matrix reduce_split_buffers(std::span<const Fp32Matrix> buffers) {
    if (buffers.empty()) throw ShapeError("reduce_split_buffers: need at least one buffer");
    for (const auto& b : buffers) {
        if (b.rows != buffers[0].rows || b.cols != buffers[0].cols) {
            throw ShapeError("reduce_split_buffers: buffer shapes differ");
        }
    }
    Fp16Matrix out(buffers[0].rows, buffers[0].cols);
    for (size_t e = 0; e < out.size(); ++e) {
        float v = buffers[0].data[e];
        for (size_t s = 1; s < buffers.size(); ++s) v += buffers[s].data[e];
        out.data[e] = f16_from_f32(v);
    }
    return out;
}

namespace {

struct Extent {
    uint32_t begin;
    uint32_t size;
};

Extent tile_extent(uint32_t idx, uint32_t tile, uint32_t total) {
    const uint32_t begin = idx * tile;
    return {begin, std::min(tile, total - begin)};
}

// Contiguous K-tile range [first, last) owned by split s. Even division
// floor(k_tiles / S) per split; the last split owns the remainder tiles.
std::pair<uint32_t, uint32_t> split_tile_range(uint32_t k_tiles, uint32_t splits, uint32_t s) {
    const uint32_t q = k_tiles / splits;
    const uint32_t first = s * q;
    const uint32_t last = (s + 1 == splits) ? k_tiles : (s + 1) * q;
    return {first, last};
}

struct PipelineDims {
    uint32_t m = 0, n = 0, k = 0;  // problem M, N, K
    uint32_t m_padded = 0;
    uint32_t m_tiles = 0, n_tiles = 0, k_tiles = 0;
    uint32_t splits = 1;
};

PipelineDims make_dims(uint32_t m, uint32_t n, uint32_t k, const SplitKPlan& plan, uint32_t splits) {
    PipelineDims d;
    d.m = m;
    d.n = n;
    d.k = k;
    d.m_padded = ceil_div(m, plan.tile_m) * plan.tile_m;
    d.m_tiles = d.m_padded / plan.tile_m;
    d.n_tiles = ceil_div(n, plan.tile_n);
    d.k_tiles = ceil_div(k, plan.tile_k);
    d.splits = splits;
    return d;
}

// Widen a block of binary16 codes into a dense float buffer via the decode
// table (bit-equivalent to f16_to_f32 by construction).
void widen_block(const Fp16Matrix& src, uint32_t row0, uint32_t rows, uint32_t col0,
                 uint32_t cols, std::vector<float>& dst) {
    const auto& table = f16_widen_table();
    dst.resize(static_cast<size_t>(rows) * cols);
    for (uint32_t r = 0; r < rows; ++r) {
        const F16* in = &src.data[static_cast<size_t>(row0 + r) * src.cols + col0];
        float* out = &dst[static_cast<size_t>(r) * cols];
        for (uint32_t c = 0; c < cols; ++c) out[c] = table[in[c].bits];
    }
}

// ---------------------------------------------------------------------------
// Phase 1: dequantize packed weights into the FP16 workspace. One work unit
// per n-column strip (the Alg-style strided vector-core assignment); each
// strip walks its K-tiles in order.
// ---------------------------------------------------------------------------
void run_dequant_phase(const PackedInt4Matrix& w, const QuantParams& params,
                       const SplitKPlan& plan, const PipelineDims& d, Workspace& ws,
                       ExecTrace& trace, unsigned workers) {
    const size_t event_base = trace.events.size();
    trace.events.resize(event_base + 2 * d.n_tiles);

    // Serial cost pre-pass keeps categorized totals deterministic.
    for (uint32_t ni = 0; ni < d.n_tiles; ++ni) {
        const Extent ce = tile_extent(ni, plan.tile_n, d.n);
        const uint64_t elems = static_cast<uint64_t>(d.k) * ce.size;
        trace.traffic.weight_packed_read += elems / 2;
        trace.traffic.dequant_write += 2 * elems;
        trace.phase_ops[0] += elems;

        TraceEvent& mte = trace.events[event_base + 2 * ni];
        mte = {Phase::dequant, UnitKind::mte, elems / 2, 2 * elems, 0, 0, 0, ni};
        TraceEvent& vec = trace.events[event_base + 2 * ni + 1];
        vec = {Phase::dequant, UnitKind::vector, 0, 0, elems, 0, 0, ni};
    }

    parallel_for(d.n_tiles, workers, [&](uint64_t u) {
        const auto ni = static_cast<uint32_t>(u);
        const Extent ce = tile_extent(ni, plan.tile_n, d.n);
        for (uint32_t kt = 0; kt < d.k_tiles; ++kt) {
            const Extent ke = tile_extent(kt, plan.tile_k, d.k);
            const Fp16Matrix tile =
                dequantize_tile(w, params, ke.begin, ke.begin + ke.size, ce.begin, ce.begin + ce.size);
            for (uint32_t r = 0; r < ke.size; ++r) {
                std::copy_n(&tile.data[static_cast<size_t>(r) * ce.size], ce.size,
                            &ws.dequant_buffer.data[static_cast<size_t>(ke.begin + r) * d.n + ce.begin]);
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Phase 2: per-(split, m-tile, n-tile) work unit. Each unit accumulates its
// K-slice on chip in binary32 (K-tiles ascending, k ascending within a tile)
// and writes its split-buffer tile once. Loads after the first pass stop
// counting bytes under the row-resident reuse policy (the data stays on
// chip); the arithmetic is identical either way.
// ---------------------------------------------------------------------------
struct GemmUnitCost {
    uint64_t a_bytes = 0;
    uint64_t b_bytes = 0;
    uint64_t out_bytes = 0;
    uint64_t macs = 0;
};

GemmUnitCost gemm_unit_cost(const PipelineDims& d, const SplitKPlan& plan, uint32_t s,
                            uint32_t mi, uint32_t ni, bool direct_c_write) {
    GemmUnitCost cost;
    const auto [kt0, kt1] = split_tile_range(d.k_tiles, d.splits, s);
    const Extent ce = tile_extent(ni, plan.tile_n, d.n);
    uint64_t k_span = 0;
    for (uint32_t kt = kt0; kt < kt1; ++kt) k_span += tile_extent(kt, plan.tile_k, d.k).size;

    const bool count_a = plan.reuse == ReusePolicy::unit || ni == 0;
    const bool count_b = plan.reuse == ReusePolicy::unit || mi == 0;
    if (count_a) cost.a_bytes = 2 * static_cast<uint64_t>(plan.tile_m) * k_span;
    if (count_b) cost.b_bytes = 2 * k_span * ce.size;
    cost.macs = static_cast<uint64_t>(plan.tile_m) * ce.size * k_span;

    if (direct_c_write) {
        // FP16 C rows inside the real output (padding rows are discarded).
        const uint32_t row0 = mi * plan.tile_m;
        const uint32_t rows_real = row0 >= d.m ? 0 : std::min(plan.tile_m, d.m - row0);
        cost.out_bytes = 2 * static_cast<uint64_t>(rows_real) * ce.size;
    } else {
        cost.out_bytes = 4 * static_cast<uint64_t>(plan.tile_m) * ce.size;  // FP32 split tile
    }
    return cost;
}

// The shared inner kernel: acc[i][j] += a[i][k] * b[k][j] with j innermost so
// independent per-element chains vectorize; the per-element accumulation
// order (kt, then k) is unchanged by vectorization.
void accumulate_tile(const float* a_rows, size_t a_stride, const float* b_tile, uint32_t m,
                     uint32_t kk, uint32_t cn, float* acc) {
    for (uint32_t i = 0; i < m; ++i) {
        const float* arow = a_rows + static_cast<size_t>(i) * a_stride;
        float* crow = acc + static_cast<size_t>(i) * cn;
        for (uint32_t k = 0; k < kk; ++k) {
            const float aik = arow[k];
            const float* brow = b_tile + static_cast<size_t>(k) * cn;
            for (uint32_t j = 0; j < cn; ++j) crow[j] += aik * brow[j];
        }
    }
}

void run_gemm_phase(const std::vector<float>& a_widened, const Fp16Matrix& b_source,
                    const SplitKPlan& plan, const PipelineDims& d, Workspace& ws,
                    ExecTrace& trace, unsigned workers) {
    const uint64_t units = static_cast<uint64_t>(d.splits) * d.m_tiles * d.n_tiles;
    const size_t event_base = trace.events.size();
    trace.events.resize(event_base + 2 * units);

    for (uint64_t u = 0; u < units; ++u) {
        const auto s = static_cast<uint32_t>(u / (static_cast<uint64_t>(d.m_tiles) * d.n_tiles));
        const auto rem = static_cast<uint32_t>(u % (static_cast<uint64_t>(d.m_tiles) * d.n_tiles));
        const uint32_t mi = rem / d.n_tiles;
        const uint32_t ni = rem % d.n_tiles;
        const GemmUnitCost cost = gemm_unit_cost(d, plan, s, mi, ni, /*direct_c_write=*/false);
        trace.traffic.a_read += cost.a_bytes;
        trace.traffic.dequant_read += cost.b_bytes;
        trace.traffic.split_write += cost.out_bytes;
        trace.phase_ops[1] += cost.macs;
        trace.events[event_base + 2 * u] =
            {Phase::gemm, UnitKind::mte, cost.a_bytes + cost.b_bytes, cost.out_bytes, 0, s, mi, ni};
        trace.events[event_base + 2 * u + 1] =
            {Phase::gemm, UnitKind::cube, 0, 0, cost.macs, s, mi, ni};
    }

    parallel_for(units, workers, [&](uint64_t u) {
        const auto s = static_cast<uint32_t>(u / (static_cast<uint64_t>(d.m_tiles) * d.n_tiles));
        const auto rem = static_cast<uint32_t>(u % (static_cast<uint64_t>(d.m_tiles) * d.n_tiles));
        const uint32_t mi = rem / d.n_tiles;
        const uint32_t ni = rem % d.n_tiles;
        const auto [kt0, kt1] = split_tile_range(d.k_tiles, d.splits, s);
        const Extent ce = tile_extent(ni, plan.tile_n, d.n);
        const uint32_t row0 = mi * plan.tile_m;

        std::vector<float> acc(static_cast<size_t>(plan.tile_m) * ce.size, 0.0f);
        std::vector<float> b_tile;
        for (uint32_t kt = kt0; kt < kt1; ++kt) {
            const Extent ke = tile_extent(kt, plan.tile_k, d.k);
            widen_block(b_source, ke.begin, ke.size, ce.begin, ce.size, b_tile);
            const float* a_rows = &a_widened[static_cast<size_t>(row0) * d.k + ke.begin];
            accumulate_tile(a_rows, d.k, b_tile.data(), plan.tile_m, ke.size, ce.size, acc.data());
        }

        Fp32Matrix& buf = ws.split_buffers[s];
        for (uint32_t i = 0; i < plan.tile_m; ++i) {
            std::copy_n(&acc[static_cast<size_t>(i) * ce.size], ce.size,
                        &buf.data[static_cast<size_t>(row0 + i) * d.n + ce.begin]);
        }
    });
}

// ---------------------------------------------------------------------------
// Phase 3: vector lanes fold the split buffers elementwise in ascending split
// index and cast to FP16. Elements are partitioned contiguously across the
// plan's logical vector lanes; padding rows are reduced but never written.
// ---------------------------------------------------------------------------
Fp16Matrix run_reduce_phase(const Workspace& ws, const SplitKPlan& plan, const PipelineDims& d,
                            ExecTrace& trace, unsigned workers) {
    const uint64_t total = static_cast<uint64_t>(d.m_padded) * d.n;
    const uint64_t real = static_cast<uint64_t>(d.m) * d.n;
    const uint64_t lanes = std::max<uint64_t>(
        1, std::min<uint64_t>(static_cast<uint64_t>(plan.num_ai_cores) * plan.vec_per_core, total));
    const uint64_t q = total / lanes;
    const uint64_t r = total % lanes;
    auto lane_range = [&](uint64_t v) {
        const uint64_t begin = v * q + std::min(v, r);
        return std::pair<uint64_t, uint64_t>{begin, begin + q + (v < r ? 1 : 0)};
    };

    const size_t event_base = trace.events.size();
    trace.events.resize(event_base + 2 * lanes);
    const uint64_t splits = ws.split_buffers.size();
    for (uint64_t v = 0; v < lanes; ++v) {
        const auto [e0, e1] = lane_range(v);
        const uint64_t len = e1 - e0;
        const uint64_t writable = std::min(e1, real) - std::min(e0, real);
        trace.traffic.split_read += 4 * splits * len;
        trace.traffic.c_write += 2 * writable;
        trace.phase_ops[2] += splits * len;
        trace.events[event_base + 2 * v] =
            {Phase::reduce, UnitKind::mte, 4 * splits * len, 2 * writable, 0, 0, 0, static_cast<uint32_t>(v)};
        trace.events[event_base + 2 * v + 1] =
            {Phase::reduce, UnitKind::vector, 0, 0, splits * len, 0, 0, static_cast<uint32_t>(v)};
    }

    Fp16Matrix c(d.m, d.n);
    parallel_for(lanes, workers, [&](uint64_t v) {
        const auto [e0, e1] = lane_range(v);
        for (uint64_t e = e0; e < e1; ++e) {
            float acc = ws.split_buffers[0].data[e];
            for (uint64_t s = 1; s < splits; ++s) acc += ws.split_buffers[s].data[e];
            // Row-major with padding rows at the bottom: element index < M*N
            // iff the element belongs to a real output row.
            if (e < real) c.data[e] = f16_from_f32(acc);
        }
    });
    return c;
}

GemmResult run_w4a16_pipeline(const Fp16Matrix& a, const PackedInt4Matrix& w,
                              const QuantParams& params, const SplitKPlan& plan, uint32_t splits,
                              unsigned workers) {
    validate(plan);
    validate(params, w.cols);
    if (a.rows < 1 || a.cols < 1) throw ShapeError("gemm: A must be non-empty");
    if (w.cols < 8) throw ShapeError("gemm: weights must have at least one packed column group");
    if (a.cols != w.rows) {
        throw ShapeError("gemm: A cols (" + std::to_string(a.cols) + ") != W rows (" +
                         std::to_string(w.rows) + ")");
    }

    const PipelineDims d = make_dims(a.rows, w.cols, w.rows, plan, splits);
    const Fp16Matrix a_padded = pad_batch(a, plan.tile_m);
    std::vector<float> a_widened;
    widen_block(a_padded, 0, d.m_padded, 0, d.k, a_widened);

    Workspace ws;
    ws.dequant_buffer = Fp16Matrix(d.k, d.n);
    ws.split_buffers.assign(splits, Fp32Matrix(d.m_padded, d.n));

    GemmResult result;
    result.trace.events.reserve(2 * (d.n_tiles +
                                     static_cast<size_t>(splits) * d.m_tiles * d.n_tiles +
                                     static_cast<size_t>(plan.num_ai_cores) * plan.vec_per_core));
    run_dequant_phase(w, params, plan, d, ws, result.trace, workers);
    run_gemm_phase(a_widened, ws.dequant_buffer, plan, d, ws, result.trace, workers);
    result.c = run_reduce_phase(ws, plan, d, result.trace, workers);
    return result;
}

}  // namespace

GemmResult splitk_w4a16_gemm(const Fp16Matrix& a, const PackedInt4Matrix& w,
                             const QuantParams& params, const SplitKPlan& plan,
                             unsigned workers) {
    return run_w4a16_pipeline(a, w, params, plan, plan.split, workers);
}

GemmResult dataparallel_w4a16_gemm(const Fp16Matrix& a, const PackedInt4Matrix& w,
                                   const QuantParams& params, const SplitKPlan& plan,
                                   unsigned workers) {
    // Output-tile-only decomposition: the S=1 instance of the same pipeline.
    // Each unit owns the full-K reduction for its (m, n) tile and there is a
    // single FP32 accumulator buffer.
    return run_w4a16_pipeline(a, w, params, plan, 1, workers);
}

GemmResult fp16_gemm(const Fp16Matrix& a, const Fp16Matrix& b, const SplitKPlan& plan,
                     unsigned workers) {
    validate(plan);
    if (a.rows < 1 || a.cols < 1) throw ShapeError("fp16_gemm: A must be non-empty");
    if (b.rows < 1 || b.cols < 1) throw ShapeError("fp16_gemm: B must be non-empty");
    if (a.cols != b.rows) {
        throw ShapeError("fp16_gemm: A cols (" + std::to_string(a.cols) + ") != B rows (" +
                         std::to_string(b.rows) + ")");
    }

    const PipelineDims d = make_dims(a.rows, b.cols, b.rows, plan, 1);
    const Fp16Matrix a_padded = pad_batch(a, plan.tile_m);
    std::vector<float> a_widened;
    widen_block(a_padded, 0, d.m_padded, 0, d.k, a_widened);

    GemmResult result;
    const uint64_t units = static_cast<uint64_t>(d.m_tiles) * d.n_tiles;
    result.trace.events.resize(2 * units);
    for (uint64_t u = 0; u < units; ++u) {
        const auto mi = static_cast<uint32_t>(u / d.n_tiles);
        const auto ni = static_cast<uint32_t>(u % d.n_tiles);
        const GemmUnitCost cost = gemm_unit_cost(d, plan, 0, mi, ni, /*direct_c_write=*/true);
        result.trace.traffic.a_read += cost.a_bytes;
        result.trace.traffic.dequant_read += cost.b_bytes;  // FP16 weight stream (B read)
        result.trace.traffic.c_write += cost.out_bytes;
        result.trace.phase_ops[1] += cost.macs;
        result.trace.events[2 * u] =
            {Phase::gemm, UnitKind::mte, cost.a_bytes + cost.b_bytes, cost.out_bytes, 0, 0, mi, ni};
        result.trace.events[2 * u + 1] = {Phase::gemm, UnitKind::cube, 0, 0, cost.macs, 0, mi, ni};
    }

    Fp16Matrix c(d.m, d.n);
    parallel_for(units, workers, [&](uint64_t u) {
        const auto mi = static_cast<uint32_t>(u / d.n_tiles);
        const auto ni = static_cast<uint32_t>(u % d.n_tiles);
        const Extent ce = tile_extent(ni, plan.tile_n, d.n);
        const uint32_t row0 = mi * plan.tile_m;

        std::vector<float> acc(static_cast<size_t>(plan.tile_m) * ce.size, 0.0f);
        std::vector<float> b_tile;
        for (uint32_t kt = 0; kt < d.k_tiles; ++kt) {
            const Extent ke = tile_extent(kt, plan.tile_k, d.k);
            widen_block(b, ke.begin, ke.size, ce.begin, ce.size, b_tile);
            const float* a_rows = &a_widened[static_cast<size_t>(row0) * d.k + ke.begin];
            accumulate_tile(a_rows, d.k, b_tile.data(), plan.tile_m, ke.size, ce.size, acc.data());
        }

        // Direct FP16 write: cast on the way out, real rows only.
        const uint32_t rows_real = row0 >= d.m ? 0 : std::min(plan.tile_m, d.m - row0);
        for (uint32_t i = 0; i < rows_real; ++i) {
            for (uint32_t j = 0; j < ce.size; ++j) {
                c.at(row0 + i, ce.begin + j) = f16_from_f32(acc[static_cast<size_t>(i) * ce.size + j]);
            }
        }
    });
    result.c = std::move(c);
    return result;
}

}  // namespace w4a16
