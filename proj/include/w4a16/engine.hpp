#pragma once

// The three matrix-multiplication engines:
//
//   splitk_w4a16_gemm        three-phase pipeline: (1) vector cores dequantize
//                            packed weights to an FP16 global workspace,
//                            (2) cube cores compute per-K-slice partial
//                            products into S FP32 split buffers, (3) vector
//                            cores reduce the buffers and cast FP32 -> FP16.
//   dataparallel_w4a16_gemm  same pipeline with the split factor forced to 1:
//                            work partitions over output tiles only and there
//                            is a single FP32 accumulator buffer.
//   fp16_gemm                native baseline: tiled FP16 x FP16 GEMM with FP32
//                            on-chip accumulation and a direct FP16 C write;
//                            no dequant phase and no FP32 round-trip.
//
// All engines are bit-reproducible: accumulation per output element is a
// fixed left-fold (K-tiles ascending, k ascending within a tile; split
// buffers reduced in ascending split index), work units write disjoint
// regions, and trace events are indexed by logical unit, so results and
// traces are identical for any worker count.

#include <cstdint>
#include <span>

#include "w4a16/matrix.hpp"
#include "w4a16/quant.hpp"
#include "w4a16/trace.hpp"

namespace w4a16 {

// Whether tile passes re-read operands from global memory (unit) or keep a
// row strip resident on chip (A across n-tiles, weights across m-tiles).
// Unit reuse is the pessimistic bound and the default.
enum class ReusePolicy : uint8_t { unit = 0, full_row_resident = 1 };

struct SplitKPlan {
    uint32_t split = 1;        // S >= 1; K-tiles divide into S contiguous slices
    uint32_t tile_m = 128;     // multiples of the 16x16x16 cube granule
    uint32_t tile_n = 128;
    uint32_t tile_k = 128;
    uint32_t num_ai_cores = 24;
    uint32_t vec_per_core = 2;
    ReusePolicy reuse = ReusePolicy::unit;
};

// Throws ShapeError when tiles are not positive multiples of 16, S < 1, or
// core counts are zero.
void validate(const SplitKPlan& plan);

// Global-memory images that live between phases.
struct Workspace {
    Fp16Matrix dequant_buffer;              // K x N, written by phase 1
    std::vector<Fp32Matrix> split_buffers;  // S of M' x N, zeroed before phase 2
};

struct GemmResult {
    Fp16Matrix c;     // M x N (padding rows computed then discarded)
    ExecTrace trace;
};

// Zero-pads A with rows up to the next multiple of m_tile.
Fp16Matrix pad_batch(const Fp16Matrix& a, uint32_t m_tile);

// Elementwise left-fold of the buffers in ascending index, one binary32 add
// per step, then f16 cast. S == 1 is exactly the cast of the single buffer.
Fp16Matrix reduce_split_buffers(std::span<const Fp32Matrix> buffers);

// workers: actual threads to map logical cores onto; 0 = hardware count.
GemmResult splitk_w4a16_gemm(const Fp16Matrix& a, const PackedInt4Matrix& w,
                             const QuantParams& params, const SplitKPlan& plan,
                             unsigned workers = 0);

GemmResult dataparallel_w4a16_gemm(const Fp16Matrix& a, const PackedInt4Matrix& w,
                                   const QuantParams& params, const SplitKPlan& plan,
                                   unsigned workers = 0);

GemmResult fp16_gemm(const Fp16Matrix& a, const Fp16Matrix& b, const SplitKPlan& plan,
                     unsigned workers = 0);

}  // namespace w4a16
