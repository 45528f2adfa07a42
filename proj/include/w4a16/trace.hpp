#pragma once

// Execution traces. Engines emit one MTE event (global-memory bytes) and one
// compute event (MACs or vector element ops) per logical work unit, plus a
// categorized byte breakdown whose totals are exact functions of
// (M, N, K, S, tiles); the machine module holds the matching closed forms.

#include <array>
#include <cstdint>
#include <vector>

namespace w4a16 {

enum class Phase : uint8_t { dequant = 0, gemm = 1, reduce = 2 };

enum class UnitKind : uint8_t { cube = 0, vector = 1, mte = 2 };

struct TraceEvent {
    Phase phase = Phase::dequant;
    UnitKind unit = UnitKind::mte;
    uint64_t bytes_read = 0;    // from global memory
    uint64_t bytes_written = 0; // to global memory
    uint64_t ops = 0;           // MACs on cube events, element ops on vector events
    // Tile coordinates of the emitting work unit (unused fields stay 0).
    uint32_t split = 0;
    uint32_t tile_m = 0;
    uint32_t tile_n = 0;
};

// Byte totals per traffic category, all exact integers.
//   weight_packed_read  packed INT4 weight words read in the dequant phase
//   dequant_write       FP16 weights written to the workspace
//   dequant_read        FP16 weight stream read by the cube (workspace for
//                       W4A16, the B matrix directly for the FP16 baseline)
//   a_read              activation tiles read by the cube
//   split_write/read    FP32 partial-result buffers (S buffers of M' x N)
//   c_write             final FP16 output (real rows only, padding discarded)
struct TrafficReport {
    uint64_t weight_packed_read = 0;
    uint64_t dequant_write = 0;
    uint64_t dequant_read = 0;
    uint64_t a_read = 0;
    uint64_t split_write = 0;
    uint64_t split_read = 0;
    uint64_t c_write = 0;

    uint64_t total_bytes() const {
        return weight_packed_read + dequant_write + dequant_read + a_read + split_write +
               split_read + c_write;
    }
    // The full journey of the weight operand to the cube core; the W4A16 /
    // FP16 ratio of this quantity is the memory-round-trip overhead.
    uint64_t weight_path_bytes() const {
        return weight_packed_read + dequant_write + dequant_read;
    }
    friend bool operator==(const TrafficReport&, const TrafficReport&) = default;
};

struct ExecTrace {
    std::vector<TraceEvent> events;   // deterministic order: by (phase, unit index)
    TrafficReport traffic;            // categorized byte totals
    std::array<uint64_t, 3> phase_ops{};  // [dequant elems, gemm MACs, reduce elems]

    uint64_t phase_bytes(Phase p) const {
        uint64_t total = 0;
        for (const auto& e : events) {
            if (e.phase == p) total += e.bytes_read + e.bytes_written;
        }
        return total;
    }
    uint64_t total_bytes() const { return traffic.total_bytes(); }
    uint64_t gemm_macs() const { return phase_ops[1]; }
};

}  // namespace w4a16
