#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "trc/tensor.hpp"
#include "trc/vbi.hpp"

namespace trc {

//! One experiment grid: methods x missing ratios x noise levels, each cell
//! repeated `reps` times on freshly drawn data. Both methods of a repetition
//! see the same tensor and mask, so per-seed comparisons are paired.
struct SweepSpec {
  std::vector<std::string> methods;       // "tr-vbi", "tr-als"
  Shape dims;
  std::vector<index_t> ranks_true;        // broadcast from one value if needed
  std::vector<double> mrs;
  std::vector<std::optional<double>> snrs;  // nullopt = noiseless
  int reps = 10;
  std::uint64_t seed = 0;                 // master seed; per-cell streams derive from it
  FitConfig vbi;
  std::vector<index_t> als_ranks;         // empty = use ranks_true
  double als_ridge = 1e-10;
  int als_max_sweeps = 100;
  double als_tol = 1e-8;
  std::string out;                        // CSV path, optional
};

//! Builds a SweepSpec from a flat key=value map (see read_kv_file). Keys:
//! method (comma list), dims (AxBxC), rank (RxRx.. or one value), mr and snr
//! (comma lists, snr accepts "none"), reps, seed, out, als_ranks, als_ridge,
//! als_max_sweeps, als_tol, plus the fit config keys understood by
//! apply_config except seed. An empty map yields a spec with no cells;
//! anything else must name dims and rank. Unknown keys throw.
SweepSpec parse_sweep_spec(const std::map<std::string, std::string>& kv);

struct ExperimentRecord {
  std::string method;
  Shape dims;
  std::vector<index_t> ranks_true;
  int r_init = -1;                        // -1 = not applicable
  double mr = 0.0;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;                 // per-repetition fit seed
  std::vector<index_t> ranks_inferred;
  double rse_val = 0.0;                   // NaN = blank column
  double psnr_val = 0.0;
  double air = 0.0;                       // cell-level aggregate, rank-inferring methods only
  double var = 0.0;
  int iters = 0;
  double wall_s = 0.0;
  bool failed = false;
  std::string error;
};

//! Runs every cell of the grid, one record per (cell, repetition, method).
//! A failing repetition is kept as a record with failed=true and empty
//! metrics; the sweep continues. Per-cell mean/std summaries go to log when
//! given.
std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec,
                                        std::ostream* log = nullptr);

std::string csv_header();
std::string csv_row(const ExperimentRecord& r);
void write_csv(const std::vector<ExperimentRecord>& records, const std::string& path);

}  // namespace trc
