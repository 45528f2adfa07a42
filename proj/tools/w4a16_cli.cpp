// Command-line harness: quantize weight files, run the GEMM engines, sweep
// the benchmark grid into a CSV, and print traffic-model reports.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "w4a16/engine.hpp"
#include "w4a16/io.hpp"
#include "w4a16/machine.hpp"
#include "w4a16/util.hpp"

using namespace w4a16;

namespace {

struct PlanFlags {
    std::vector<uint32_t> tile{128, 128, 128};
    uint32_t cores = 24;
    uint32_t vec_per_core = 2;
    std::string reuse = "unit";

    SplitKPlan plan(uint32_t split) const {
        SplitKPlan p;
        if (tile.size() != 3) throw Error("--tile needs exactly m,n,k");
        p.tile_m = tile[0];
        p.tile_n = tile[1];
        p.tile_k = tile[2];
        p.split = split;
        p.num_ai_cores = cores;
        p.vec_per_core = vec_per_core;
        if (reuse == "unit") {
            p.reuse = ReusePolicy::unit;
        } else if (reuse == "resident") {
            p.reuse = ReusePolicy::full_row_resident;
        } else {
            throw Error("--reuse must be 'unit' or 'resident'");
        }
        return p;
    }
};

void add_plan_flags(CLI::App* cmd, PlanFlags& flags) {
    cmd->add_option("--tile", flags.tile, "tile sizes m,n,k (multiples of 16)")
        ->delimiter(',')
        ->expected(3);
    cmd->add_option("--cores", flags.cores, "AI core count in the plan");
    cmd->add_option("--vec-per-core", flags.vec_per_core, "vector cores per AI core");
    cmd->add_option("--reuse", flags.reuse, "operand reuse policy: unit | resident");
}

QuantMode parse_mode(const std::string& mode) {
    if (mode == "per-channel") return QuantMode::per_channel;
    if (mode == "per-tensor") return QuantMode::per_tensor;
    throw Error("--mode must be 'per-channel' or 'per-tensor'");
}

MachineConfig load_config(const std::string& path) {
    return path.empty() ? MachineConfig{} : read_machine_config(path);
}

uint64_t checksum(const Fp16Matrix& m) {
    std::vector<uint8_t> bytes;
    bytes.reserve(m.size() * 2);
    for (F16 h : m.data) {
        bytes.push_back(static_cast<uint8_t>(h.bits & 0xFF));
        bytes.push_back(static_cast<uint8_t>(h.bits >> 8));
    }
    return fnv1a64(bytes.data(), bytes.size());
}

// Binary16 values on the 1/256 grid in [-1, 1]; exactly representable, so
// generation is platform-independent given the seed.
Fp16Matrix random_unit_matrix(SplitMix64& rng, uint32_t rows, uint32_t cols) {
    Fp16Matrix m(rows, cols);
    for (auto& h : m.data) {
        h = f16_from_f32(static_cast<float>(rng.next_in(-256, 256)) / 256.0f);
    }
    return m;
}

void print_traffic(const TrafficReport& t) {
    std::printf("  weight_packed_read = %" PRIu64 " B\n", t.weight_packed_read);
    std::printf("  dequant_write      = %" PRIu64 " B\n", t.dequant_write);
    std::printf("  dequant_read       = %" PRIu64 " B\n", t.dequant_read);
    std::printf("  a_read             = %" PRIu64 " B\n", t.a_read);
    std::printf("  split_write        = %" PRIu64 " B\n", t.split_write);
    std::printf("  split_read         = %" PRIu64 " B\n", t.split_read);
    std::printf("  c_write            = %" PRIu64 " B\n", t.c_write);
    std::printf("  total              = %" PRIu64 " B\n", t.total_bytes());
}

const char* bound_name(BoundKind b) { return b == BoundKind::memory ? "memory" : "compute"; }

void print_cost(const CostReport& c) {
    std::printf("  dequant = %.9e s (%s)\n", c.dequant_s, bound_name(c.dequant_bound));
    std::printf("  gemm    = %.9e s (%s)\n", c.gemm_s, bound_name(c.gemm_bound));
    std::printf("  reduce  = %.9e s (%s)\n", c.reduce_s, bound_name(c.reduce_bound));
    std::printf("  total   = %.9e s\n", c.total_s);
}

// --------------------------------------------------------------------------

int cmd_quantize(const std::string& in, const std::string& out, const std::string& mode_name) {
    const Fp16Matrix wf = read_f16m(in);
    const QuantMode mode = parse_mode(mode_name);
    const QuantizedWeights qw = quantize_matrix(wf, mode);
    write_w4a16(out, qw.packed, qw.params);

    const Fp16Matrix back = dequantize_tile(qw.packed, qw.params, 0, qw.packed.rows, 0, qw.packed.cols);
    double max_err = 0.0;
    for (size_t i = 0; i < wf.size(); ++i) {
        max_err = std::max(max_err, std::fabs(static_cast<double>(f16_to_f32(back.data[i])) -
                                              f16_to_f32(wf.data[i])));
    }
    std::printf("quantized %ux%u mode=%s scales=%zu max_error=%.9e\n", qw.packed.rows,
                qw.packed.cols, mode_name.c_str(), qw.params.scales.size(), max_err);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_gemm(const std::string& a_path, const std::string& w_path, const std::string& engine,
             uint32_t split, const PlanFlags& flags, const std::string& config_path,
             unsigned threads, const std::string& out) {
    const Fp16Matrix a = read_f16m(a_path);
    const QuantizedWeights qw = read_w4a16(w_path);
    const SplitKPlan plan = flags.plan(split);
    const MachineConfig cfg = load_config(config_path);
    const ProblemShape shape{a.rows, qw.packed.cols, qw.packed.rows};

    GemmResult result;
    EngineKind kind;
    if (engine == "splitk") {
        result = splitk_w4a16_gemm(a, qw.packed, qw.params, plan, threads);
        kind = EngineKind::splitk;
    } else if (engine == "dataparallel") {
        result = dataparallel_w4a16_gemm(a, qw.packed, qw.params, plan, threads);
        kind = EngineKind::dataparallel;
    } else if (engine == "fp16") {
        // Baseline runs on the dequantized weights.
        const Fp16Matrix b = dequantize_tile(qw.packed, qw.params, 0, qw.packed.rows, 0, qw.packed.cols);
        result = fp16_gemm(a, b, plan, threads);
        kind = EngineKind::fp16;
    } else {
        throw Error("--engine must be splitk, dataparallel or fp16");
    }

    if (!out.empty()) write_f16m(out, result.c);

    std::printf("engine=%s C=%ux%u checksum=%016" PRIx64 "\n", engine.c_str(), result.c.rows,
                result.c.cols, checksum(result.c));
    std::printf("traffic (from trace):\n");
    print_traffic(result.trace.traffic);
    std::printf("model estimate:\n");
    print_cost(estimate_time_scheduled(profile_pipeline(kind, shape, plan), cfg));
    if (!out.empty()) std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_traffic(uint32_t n, uint32_t k, uint32_t m, uint32_t split, const PlanFlags& flags,
                const std::string& config_path) {
    const SplitKPlan plan = flags.plan(split);
    const MachineConfig cfg = load_config(config_path);
    const ProblemShape shape{m, n, k};

    const TrafficReport sk = traffic_w4a16_splitk(shape, plan);
    const TrafficReport f16 = traffic_fp16(shape, plan);

    std::printf("shape M=%u N=%u K=%u, tiles %u,%u,%u, S=%u\n", m, n, k, plan.tile_m, plan.tile_n,
                plan.tile_k, plan.split);
    std::printf("w4a16 split-K traffic:\n");
    print_traffic(sk);
    std::printf("fp16 baseline traffic:\n");
    print_traffic(f16);
    std::printf("weight-path ratio w4a16/fp16 = %.6f\n",
                static_cast<double>(sk.weight_path_bytes()) /
                    static_cast<double>(f16.weight_path_bytes()));

    std::printf("w4a16 split-K model estimate:\n");
    print_cost(estimate_time_scheduled(profile_pipeline(EngineKind::splitk, shape, plan), cfg));
    std::printf("dataparallel model estimate:\n");
    print_cost(estimate_time_scheduled(profile_pipeline(EngineKind::dataparallel, shape, plan), cfg));
    std::printf("fp16 model estimate:\n");
    print_cost(estimate_time_scheduled(profile_pipeline(EngineKind::fp16, shape, plan), cfg));

    const SpeedupReport sp = predicted_speedup(shape, plan, cfg);
    std::printf("predicted speedups: splitk_vs_dataparallel=%.6f w4a16_vs_fp16=%.6f\n",
                sp.splitk_vs_dataparallel, sp.w4a16_vs_fp16);
    return 0;
}

struct SweepSpec {
    std::vector<std::pair<uint32_t, uint32_t>> shapes;  // (N, K)
    std::vector<uint32_t> ms{1, 8, 16, 32};
    std::vector<uint32_t> splits{1, 2, 4, 8};
    std::vector<std::string> engines{"splitk", "dataparallel", "fp16"};
    std::string mode = "per-channel";
    uint64_t seed = 42;
};

int cmd_sweep(const SweepSpec& spec, const PlanFlags& flags, const std::string& config_path,
              unsigned threads, const std::string& out_path) {
    const MachineConfig cfg = load_config(config_path);
    for (const auto& e : spec.engines) {
        if (e != "splitk" && e != "dataparallel" && e != "fp16") {
            throw Error("unknown engine '" + e + "' in --engines");
        }
    }
    if (spec.shapes.empty() || spec.ms.empty() || spec.splits.empty() || spec.engines.empty()) {
        throw Error("sweep lists must be non-empty");
    }
    const QuantMode mode = parse_mode(spec.mode);

    std::string csv =
        "n,k,m,split,engine,checksum,weight_packed_read,dequant_write,dequant_read,a_read,"
        "split_write,split_read,c_write,total_bytes,gemm_macs,dequant_s,gemm_s,reduce_s,total_s,"
        "splitk_vs_dp,w4a16_vs_fp16\n";

    char line[512];
    for (const auto& [n, k] : spec.shapes) {
        const uint64_t wseed = mix_seed(mix_seed(spec.seed, n), k);
        SplitMix64 wrng(wseed);
        const Fp16Matrix wf = random_unit_matrix(wrng, k, n);
        const QuantizedWeights qw = quantize_matrix(wf, mode);
        const Fp16Matrix b = dequantize_tile(qw.packed, qw.params, 0, k, 0, n);

        for (uint32_t m : spec.ms) {
            SplitMix64 arng(mix_seed(wseed, m));
            const Fp16Matrix a = random_unit_matrix(arng, m, k);
            const ProblemShape shape{m, n, k};

            // Functional output depends on the split only for the splitk
            // engine; cache the rest across the S column.
            std::map<std::string, std::unique_ptr<GemmResult>> cache;
            auto run = [&](const std::string& engine, uint32_t split) -> const GemmResult& {
                const std::string key =
                    engine + (engine == "splitk" ? "/" + std::to_string(split) : "");
                auto it = cache.find(key);
                if (it == cache.end()) {
                    auto result = std::make_unique<GemmResult>();
                    if (engine == "splitk") {
                        *result = splitk_w4a16_gemm(a, qw.packed, qw.params, flags.plan(split), threads);
                    } else if (engine == "dataparallel") {
                        *result = dataparallel_w4a16_gemm(a, qw.packed, qw.params, flags.plan(1), threads);
                    } else {
                        *result = fp16_gemm(a, b, flags.plan(1), threads);
                    }
                    it = cache.emplace(key, std::move(result)).first;
                }
                return *it->second;
            };

            for (uint32_t split : spec.splits) {
                const SpeedupReport sp = predicted_speedup(shape, flags.plan(split), cfg);
                for (const auto& engine : spec.engines) {
                    const GemmResult& r = run(engine, split);
                    const EngineKind kind = engine == "splitk"        ? EngineKind::splitk
                                            : engine == "dataparallel" ? EngineKind::dataparallel
                                                                       : EngineKind::fp16;
                    const CostReport cost =
                        estimate_time_scheduled(profile_pipeline(kind, shape, flags.plan(split)), cfg);
                    const TrafficReport& t = r.trace.traffic;
                    std::snprintf(line, sizeof line,
                                  "%u,%u,%u,%u,%s,%016" PRIx64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64
                                  ",%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64
                                  ",%" PRIu64 ",%.9e,%.9e,%.9e,%.9e,%.6f,%.6f\n",
                                  n, k, m, split, engine.c_str(), checksum(r.c),
                                  t.weight_packed_read, t.dequant_write, t.dequant_read, t.a_read,
                                  t.split_write, t.split_read, t.c_write, t.total_bytes(),
                                  r.trace.gemm_macs(), cost.dequant_s, cost.gemm_s, cost.reduce_s,
                                  cost.total_s, sp.splitk_vs_dataparallel, sp.w4a16_vs_fp16);
                    csv += line;
                }
            }
        }
    }

    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + out_path + " for writing");
        f << csv;
        if (!f) throw Error("failed writing " + out_path);
        std::printf("wrote %zu rows to %s\n",
                    static_cast<size_t>(spec.shapes.size()) * spec.ms.size() * spec.splits.size() *
                        spec.engines.size(),
                    out_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"W4A16 split-K GEMM reference implementation and NPU traffic model"};
    app.require_subcommand(1);

    auto* q = app.add_subcommand("quantize", "quantize an FP16 matrix file to packed INT4");
    std::string q_in, q_out, q_mode = "per-channel";
    q->add_option("--in", q_in, "input .f16m matrix file")->required();
    q->add_option("--out", q_out, "output .w4a16 packed file")->required();
    q->add_option("--mode", q_mode, "per-channel | per-tensor");

    auto* g = app.add_subcommand("gemm", "multiply an FP16 activation file by packed weights");
    std::string g_a, g_w, g_engine = "splitk", g_config, g_out;
    uint32_t g_split = 1;
    unsigned g_threads = 0;
    PlanFlags g_flags;
    g->add_option("--a", g_a, "activation .f16m file")->required();
    g->add_option("--w", g_w, "packed weight .w4a16 file")->required();
    g->add_option("--engine", g_engine, "splitk | dataparallel | fp16");
    g->add_option("--split", g_split, "split factor S");
    g->add_option("--config", g_config, "machine config file");
    g->add_option("--threads", g_threads, "worker threads (0 = hardware)");
    g->add_option("--out", g_out, "output C .f16m file");
    add_plan_flags(g, g_flags);

    auto* t = app.add_subcommand("traffic", "print closed-form traffic and model estimates");
    std::vector<uint32_t> t_shape;
    uint32_t t_m = 16, t_split = 4;
    std::string t_config;
    PlanFlags t_flags;
    t->add_option("--shape", t_shape, "N,K")->delimiter(',')->expected(2)->required();
    t->add_option("--m", t_m, "batch rows M");
    t->add_option("--split", t_split, "split factor S");
    t->add_option("--config", t_config, "machine config file");
    add_plan_flags(t, t_flags);

    auto* s = app.add_subcommand("sweep", "run the benchmark grid and emit CSV");
    std::vector<std::string> s_shapes;
    SweepSpec spec;
    std::string s_config, s_out;
    unsigned s_threads = 0;
    PlanFlags s_flags;
    s->add_option("--shape", s_shapes, "N,K (repeatable; default: the six benchmark shapes)");
    s->add_option("--m", spec.ms, "batch sizes")->delimiter(',');
    s->add_option("--split", spec.splits, "split factors")->delimiter(',');
    s->add_option("--engines", spec.engines, "engines to run")->delimiter(',');
    s->add_option("--mode", spec.mode, "per-channel | per-tensor");
    s->add_option("--seed", spec.seed, "generation seed");
    s->add_option("--config", s_config, "machine config file");
    s->add_option("--threads", s_threads, "worker threads (0 = hardware)");
    s->add_option("--out", s_out, "CSV output path (default stdout)");
    add_plan_flags(s, s_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (q->parsed()) return cmd_quantize(q_in, q_out, q_mode);
        if (g->parsed())
            return cmd_gemm(g_a, g_w, g_engine, g_split, g_flags, g_config, g_threads, g_out);
        if (t->parsed()) return cmd_traffic(t_shape[0], t_shape[1], t_m, t_split, t_flags, t_config);
        if (s->parsed()) {
            if (s_shapes.empty()) {
                for (const auto& b : kBenchmarkShapes) spec.shapes.emplace_back(b.n, b.k);
            } else {
                for (const auto& str : s_shapes) {
                    uint32_t n = 0, k = 0;
                    if (std::sscanf(str.c_str(), "%u,%u", &n, &k) != 2) {
                        throw Error("--shape expects N,K, got '" + str + "'");
                    }
                    spec.shapes.emplace_back(n, k);
                }
            }
            return cmd_sweep(spec, s_flags, s_config, s_threads, s_out);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
