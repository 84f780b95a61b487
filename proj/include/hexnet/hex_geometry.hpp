#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

namespace hexnet {

// Hexagonally sampled data lives on an ordinary square array with alternate
// columns shifted: cells in odd-indexed columns sit half a cell lower than
// cells in even-indexed columns. Under that convention the size-1 hexagonal
// footprint around (r, c) is the cell itself, its two vertical neighbors,
// and four side neighbors whose row offsets depend on the parity of c.
//
// A size-1 hexagonal convolution decomposes into rectangular convolutions:
//   * a 2x3-footprint side kernel, middle column structurally zero, applied
//     at column stride 2 against two differently padded copies of the input
//     (one producing the even output columns, one the odd ones), and
//   * a 3x1 column kernel applied at stride 1.
// Interleaving the two strided results and adding the column result yields a
// same-shaped hexagonal convolution.

enum class HexWeight : int {
  Center = 0,
  Top = 1,
  Bottom = 2,
  TopLeft = 3,
  BottomLeft = 4,
  TopRight = 5,
  BottomRight = 6,
};

inline constexpr int kHexWeightCount = 7;

inline const char* hex_weight_name(HexWeight w) {
  switch (w) {
    case HexWeight::Center: return "center";
    case HexWeight::Top: return "top";
    case HexWeight::Bottom: return "bottom";
    case HexWeight::TopLeft: return "top_left";
    case HexWeight::BottomLeft: return "bottom_left";
    case HexWeight::TopRight: return "top_right";
    case HexWeight::BottomRight: return "bottom_right";
  }
  return "?";
}

// One cell of the footprint. Coordinates may fall outside the array; callers
// clip against their extents.
struct HexTap {
  long row;
  long col;
  HexWeight weight;
};

// The 7 taps of the size-1 footprint at (r, c). The weight naming is
// parity-consistent: top_left is always the upper of the two left cells.
inline std::array<HexTap, 7> neighborhood(long r, long c) {
  const bool odd_column = ((c % 2) + 2) % 2 == 1;
  const long up = odd_column ? 0 : -1;  // row of the upper side neighbors relative to r
  return {{
      {r, c, HexWeight::Center},
      {r - 1, c, HexWeight::Top},
      {r + 1, c, HexWeight::Bottom},
      {r + up, c - 1, HexWeight::TopLeft},
      {r + up + 1, c - 1, HexWeight::BottomLeft},
      {r + up, c + 1, HexWeight::TopRight},
      {r + up + 1, c + 1, HexWeight::BottomRight},
  }};
}

struct PadSpec {
  std::size_t top, bottom, left, right;
};

enum class SubKernel {
  Side,    // 2 rows x 3 columns, middle column structurally zero
  Column,  // 3 rows x 1 column
};

inline constexpr std::size_t kSideKernelRows = 2;
inline constexpr std::size_t kSideKernelCols = 3;
inline constexpr std::size_t kColumnKernelRows = 3;

struct PlanBranch {
  PadSpec pad;
  SubKernel kernel;
  std::size_t stride_rows;
  std::size_t stride_cols;
};

// The three padded convolutions realizing one size-1 hexagonal convolution.
// For an HxW input the branches produce H x ceil(W/2), H x floor(W/2) and
// H x W; merging the first two by alternate columns and adding the third
// gives an H x W ("same") result.
struct DecompositionPlan {
  PlanBranch even_columns;  // side kernel; output columns land on even input columns
  PlanBranch odd_columns;   // side kernel; output columns land on odd input columns
  PlanBranch vertical;      // column kernel at unit stride
};

inline DecompositionPlan decomposition_plan() {
  return DecompositionPlan{
      .even_columns = {{1, 0, 1, 1}, SubKernel::Side, 1, 2},
      .odd_columns = {{0, 1, 0, 1}, SubKernel::Side, 1, 2},
      .vertical = {{1, 1, 0, 0}, SubKernel::Column, 1, 1},
  };
}

// Position of a side weight inside the stored (2, 3) side kernel.
struct SideSlot {
  std::size_t row, col;
};

inline SideSlot side_kernel_slot(HexWeight w) {
  switch (w) {
    case HexWeight::TopLeft: return {0, 0};
    case HexWeight::TopRight: return {0, 2};
    case HexWeight::BottomLeft: return {1, 0};
    case HexWeight::BottomRight: return {1, 2};
    default: break;
  }
  throw std::invalid_argument("side_kernel_slot: not a side weight");
}

// Row of a vertical weight inside the stored (3, 1) column kernel.
inline std::size_t column_kernel_row(HexWeight w) {
  switch (w) {
    case HexWeight::Top: return 0;
    case HexWeight::Center: return 1;
    case HexWeight::Bottom: return 2;
    default: break;
  }
  throw std::invalid_argument("column_kernel_row: not a vertical weight");
}

inline bool is_side_weight(HexWeight w) {
  return w == HexWeight::TopLeft || w == HexWeight::BottomLeft ||
         w == HexWeight::TopRight || w == HexWeight::BottomRight;
}

}  // namespace hexnet
