#include "w4a16/machine.hpp"

#include <algorithm>
#include <cmath>

#include "w4a16/util.hpp"

namespace w4a16 {

void validate(const MachineConfig& cfg) {
    if (cfg.num_ai_cores < 1 || cfg.cube_per_core < 1 || cfg.vec_per_core < 1) {
        throw DomainError("machine config: core counts must be >= 1");
    }
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(cfg.gm_bandwidth) || !positive(cfg.cube_macs_per_cycle_per_core) ||
        !positive(cfg.vec_elems_per_cycle_per_core) || !positive(cfg.clock)) {
        throw DomainError("machine config: rates must be finite and > 0");
    }
    if (!std::isfinite(cfg.overlap_efficiency) || cfg.overlap_efficiency <= 0.0 ||
        cfg.overlap_efficiency > 1.0) {
        throw DomainError("machine config: overlap_efficiency must be in (0, 1]");
    }
}

namespace {

struct GridDims {
    uint64_t m_padded, m_tiles, n_tiles;
};

GridDims grid_dims(ProblemShape s, const SplitKPlan& plan) {
    if (s.m < 1 || s.n < 1 || s.k < 1) throw ShapeError("problem shape must have M, N, K >= 1");
    GridDims g;
    g.m_padded = static_cast<uint64_t>(ceil_div(s.m, plan.tile_m)) * plan.tile_m;
    g.m_tiles = g.m_padded / plan.tile_m;
    g.n_tiles = ceil_div(s.n, plan.tile_n);
    return g;
}

}  // namespace

TrafficReport traffic_w4a16_splitk(ProblemShape s, const SplitKPlan& plan) {
    validate(plan);
    const GridDims g = grid_dims(s, plan);
    const uint64_t kn = static_cast<uint64_t>(s.k) * s.n;
    const uint64_t unit_reuse = plan.reuse == ReusePolicy::unit;

    TrafficReport t;
    t.weight_packed_read = kn / 2;
    t.dequant_write = 2 * kn;
    t.dequant_read = 2 * kn * (unit_reuse ? g.m_tiles : 1);
    t.a_read = 2 * g.m_padded * s.k * (unit_reuse ? g.n_tiles : 1);
    t.split_write = 4 * static_cast<uint64_t>(plan.split) * g.m_padded * s.n;
    t.split_read = t.split_write;
    t.c_write = 2 * static_cast<uint64_t>(s.m) * s.n;
    return t;
}

TrafficReport traffic_fp16(ProblemShape s, const SplitKPlan& plan) {
    validate(plan);
    const GridDims g = grid_dims(s, plan);
    const uint64_t kn = static_cast<uint64_t>(s.k) * s.n;
    const uint64_t unit_reuse = plan.reuse == ReusePolicy::unit;

    TrafficReport t;
    t.dequant_read = 2 * kn * (unit_reuse ? g.m_tiles : 1);  // B read straight from GM
    t.a_read = 2 * g.m_padded * s.k * (unit_reuse ? g.n_tiles : 1);
    t.c_write = 2 * static_cast<uint64_t>(s.m) * s.n;
    return t;
}

PhaseOps pipeline_ops_w4a16(ProblemShape s, const SplitKPlan& plan) {
    const GridDims g = grid_dims(s, plan);
    PhaseOps ops;
    ops.dequant_elems = static_cast<uint64_t>(s.k) * s.n;
    ops.gemm_macs = g.m_padded * s.n * static_cast<uint64_t>(s.k);
    ops.reduce_elems = static_cast<uint64_t>(plan.split) * g.m_padded * s.n;
    return ops;
}

PhaseOps pipeline_ops_fp16(ProblemShape s, const SplitKPlan& plan) {
    const GridDims g = grid_dims(s, plan);
    PhaseOps ops;
    ops.gemm_macs = g.m_padded * s.n * static_cast<uint64_t>(s.k);
    return ops;
}

PhaseBytes phase_bytes_w4a16(const TrafficReport& t) {
    return {t.weight_packed_read + t.dequant_write,
            t.dequant_read + t.a_read + t.split_write,
            t.split_read + t.c_write};
}

PhaseBytes phase_bytes_fp16(const TrafficReport& t) {
    return {0, t.dequant_read + t.a_read + t.c_write, 0};
}

namespace {

struct PhaseEstimate {
    double seconds;
    BoundKind bound;
};

PhaseEstimate roofline(double mem_s, double comp_s, double overlap) {
    const double t = std::max(mem_s, comp_s) / overlap;
    return {t, mem_s >= comp_s ? BoundKind::memory : BoundKind::compute};
}

double vec_throughput(const MachineConfig& cfg) {
    return static_cast<double>(cfg.num_ai_cores) * cfg.vec_per_core *
           cfg.vec_elems_per_cycle_per_core * cfg.clock;
}

double cube_throughput(const MachineConfig& cfg) {
    return static_cast<double>(cfg.num_ai_cores) * cfg.cube_per_core *
           cfg.cube_macs_per_cycle_per_core * cfg.clock;
}

}  // namespace

CostReport estimate_time(const PhaseBytes& bytes, const PhaseOps& ops, const MachineConfig& cfg) {
    validate(cfg);
    const auto dequant = roofline(static_cast<double>(bytes.dequant) / cfg.gm_bandwidth,
                                  static_cast<double>(ops.dequant_elems) / vec_throughput(cfg),
                                  cfg.overlap_efficiency);
    const auto gemm = roofline(static_cast<double>(bytes.gemm) / cfg.gm_bandwidth,
                               static_cast<double>(ops.gemm_macs) / cube_throughput(cfg),
                               cfg.overlap_efficiency);
    const auto reduce = roofline(static_cast<double>(bytes.reduce) / cfg.gm_bandwidth,
                                 static_cast<double>(ops.reduce_elems) / vec_throughput(cfg),
                                 cfg.overlap_efficiency);
    CostReport r;
    r.dequant_s = dequant.seconds;
    r.gemm_s = gemm.seconds;
    r.reduce_s = reduce.seconds;
    r.total_s = dequant.seconds + gemm.seconds + reduce.seconds;  // barrier-separated
    r.dequant_bound = dequant.bound;
    r.gemm_bound = gemm.bound;
    r.reduce_bound = reduce.bound;
    return r;
}

PipelineProfile profile_pipeline(EngineKind engine, ProblemShape s, const SplitKPlan& plan) {
    SplitKPlan p = plan;
    if (engine == EngineKind::dataparallel) p.split = 1;
    const GridDims g = grid_dims(s, p);

    PipelineProfile prof{};
    if (engine == EngineKind::fp16) {
        const TrafficReport t = traffic_fp16(s, p);
        const PhaseOps ops = pipeline_ops_fp16(s, p);
        prof[0] = {UnitKind::vector, 0, 0, 0};
        prof[1] = {UnitKind::cube, phase_bytes_fp16(t).gemm, ops.gemm_macs, g.m_tiles * g.n_tiles};
        prof[2] = {UnitKind::vector, 0, 0, 0};
        return prof;
    }

    const TrafficReport t = traffic_w4a16_splitk(s, p);
    const PhaseBytes bytes = phase_bytes_w4a16(t);
    const PhaseOps ops = pipeline_ops_w4a16(s, p);
    prof[0] = {UnitKind::vector, bytes.dequant, ops.dequant_elems, g.n_tiles};
    prof[1] = {UnitKind::cube, bytes.gemm, ops.gemm_macs,
               static_cast<uint64_t>(p.split) * g.m_tiles * g.n_tiles};
    prof[2] = {UnitKind::vector, bytes.reduce, ops.reduce_elems, 0};
    return prof;
}

CostReport estimate_time_scheduled(const PipelineProfile& profile, const MachineConfig& cfg) {
    validate(cfg);

    auto eval = [&](const PhaseProfile& ph) -> PhaseEstimate {
        if (ph.bytes == 0 && ph.ops == 0) return {0.0, BoundKind::memory};
        const double lanes = ph.unit == UnitKind::cube
                                 ? static_cast<double>(cfg.num_ai_cores) * cfg.cube_per_core
                                 : static_cast<double>(cfg.num_ai_cores) * cfg.vec_per_core;
        const double lane_rate = ph.unit == UnitKind::cube
                                     ? cfg.cube_macs_per_cycle_per_core * cfg.clock
                                     : cfg.vec_elems_per_cycle_per_core * cfg.clock;
        const double lane_bw = cfg.gm_bandwidth / lanes;
        if (ph.units == 0) {
            // Perfectly divisible phase: aggregate roofline.
            return roofline(static_cast<double>(ph.bytes) / cfg.gm_bandwidth,
                            static_cast<double>(ph.ops) / (lanes * lane_rate),
                            cfg.overlap_efficiency);
        }
        const double waves = static_cast<double>(
            ceil_div64(ph.units, static_cast<uint64_t>(lanes)));
        const double unit_bytes = static_cast<double>(ph.bytes) / static_cast<double>(ph.units);
        const double unit_ops = static_cast<double>(ph.ops) / static_cast<double>(ph.units);
        const auto unit_est = roofline(unit_bytes / lane_bw, unit_ops / lane_rate,
                                       cfg.overlap_efficiency);
        return {waves * unit_est.seconds, unit_est.bound};
    };

    const PhaseEstimate dequant = eval(profile[0]);
    const PhaseEstimate gemm = eval(profile[1]);
    const PhaseEstimate reduce = eval(profile[2]);
    CostReport r;
    r.dequant_s = dequant.seconds;
    r.gemm_s = gemm.seconds;
    r.reduce_s = reduce.seconds;
    r.total_s = dequant.seconds + gemm.seconds + reduce.seconds;
    r.dequant_bound = dequant.bound;
    r.gemm_bound = gemm.bound;
    r.reduce_bound = reduce.bound;
    return r;
}

SpeedupReport predicted_speedup(ProblemShape s, const SplitKPlan& plan, const MachineConfig& cfg) {
    const double t_splitk =
        estimate_time_scheduled(profile_pipeline(EngineKind::splitk, s, plan), cfg).total_s;
    const double t_dp =
        estimate_time_scheduled(profile_pipeline(EngineKind::dataparallel, s, plan), cfg).total_s;
    const double t_fp16 =
        estimate_time_scheduled(profile_pipeline(EngineKind::fp16, s, plan), cfg).total_s;
    return {t_dp / t_splitk, t_fp16 / t_splitk};
}

}  // namespace w4a16
