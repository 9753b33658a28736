#include "trc/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "trc/kv.hpp"
#include "trc/metrics.hpp"
#include "trc/model.hpp"
#include "trc/rng.hpp"
#include "trc/synth.hpp"
#include "trc/tr_als.hpp"
#include "trc/tr_ops.hpp"

namespace trc {

namespace {

constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string join_x(const std::vector<index_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<index_t> broadcast_ranks(std::vector<index_t> r, int order,
                                     const char* who) {
  if (r.size() == 1) r.assign(static_cast<size_t>(order), r[0]);
  if (static_cast<int>(r.size()) != order)
    throw std::invalid_argument(std::string(who) + ": need one rank per bond");
  return r;
}

index_t resolved_r_init(const FitConfig& cfg, const Shape& dims) {
  if (cfg.r_init > 0) return cfg.r_init;
  index_t r = 10;
  for (int n = 0; n < dims.order(); ++n) r = std::min(r, dims[n]);
  return r;
}

}  // namespace

SweepSpec parse_sweep_spec(const std::map<std::string, std::string>& kv) {
  SweepSpec spec;
  if (kv.empty()) return spec;

  static const char* fit_keys[] = {"r_init",         "max_iters",
                                   "tol",            "prune_threshold",
                                   "prune_by_lambda", "prune_burn_in",
                                   "priors.a",       "priors.b",
                                   "priors.c",       "priors.d",
                                   "overwrite_observed", "validate_invariants"};
  std::map<std::string, std::string> fit_kv;

  for (const auto& [key, value] : kv) {
    if (key == "method") {
      spec.methods = split_list(value);
    } else if (key == "dims") {
      const auto d = parse_dims(value);
      spec.dims = Shape{std::vector<index_t>(d.begin(), d.end())};
    } else if (key == "rank") {
      for (long long d : parse_dims(value)) spec.ranks_true.push_back(d);
    } else if (key == "mr") {
      spec.mrs.clear();
      for (const auto& tok : split_list(value)) spec.mrs.push_back(std::stod(tok));
    } else if (key == "snr") {
      spec.snrs.clear();
      for (const auto& tok : split_list(value)) {
        if (tok == "none")
          spec.snrs.push_back(std::nullopt);
        else
          spec.snrs.push_back(std::stod(tok));
      }
    } else if (key == "reps") {
      spec.reps = std::stoi(value);
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else if (key == "out") {
      spec.out = value;
    } else if (key == "als_ranks") {
      for (long long d : parse_dims(value)) spec.als_ranks.push_back(d);
    } else if (key == "als_ridge") {
      spec.als_ridge = std::stod(value);
    } else if (key == "als_max_sweeps") {
      spec.als_max_sweeps = std::stoi(value);
    } else if (key == "als_tol") {
      spec.als_tol = std::stod(value);
    } else {
      bool known = false;
      for (const char* fk : fit_keys) known = known || key == fk;
      if (!known) throw std::invalid_argument("sweep spec: unknown key '" + key + "'");
      fit_kv[key] = value;
    }
  }

  if (spec.methods.empty()) spec.methods = {"tr-vbi"};
  if (spec.mrs.empty()) spec.mrs = {0.1};
  if (spec.snrs.empty()) spec.snrs = {std::nullopt};
  if (spec.dims.order() == 0) throw std::invalid_argument("sweep spec: dims missing");
  if (spec.ranks_true.empty()) throw std::invalid_argument("sweep spec: rank missing");
  spec.ranks_true = broadcast_ranks(spec.ranks_true, spec.dims.order(), "sweep spec");
  if (!spec.als_ranks.empty())
    spec.als_ranks = broadcast_ranks(spec.als_ranks, spec.dims.order(), "sweep spec");
  spec.vbi = apply_config(spec.vbi, fit_kv);
  return spec;
}

std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec, std::ostream* log) {
  std::vector<ExperimentRecord> records;
  if (spec.methods.empty() || spec.dims.order() == 0 || spec.reps <= 0) return records;

  const std::vector<index_t> als_ranks =
      spec.als_ranks.empty() ? spec.ranks_true : spec.als_ranks;

  std::uint64_t cell_id = 0;
  for (double mr : spec.mrs) {
    for (const auto& snr : spec.snrs) {
      std::vector<std::vector<index_t>> cell_ranks;
      std::vector<size_t> cell_vbi_rows;
      std::map<std::string, std::vector<double>> cell_rse;

      for (int rep = 0; rep < spec.reps; ++rep) {
        const std::uint64_t data_seed =
            Rng::mix(Rng::mix(Rng::mix(spec.seed, 1), cell_id), rep);
        const std::uint64_t mask_seed =
            Rng::mix(Rng::mix(Rng::mix(spec.seed, 2), cell_id), rep);
        const std::uint64_t fit_seed =
            Rng::mix(Rng::mix(Rng::mix(spec.seed, 3), cell_id), rep);

        SynthData data = gen_synthetic(spec.dims, spec.ranks_true, snr, data_seed);
        IndexSet obs = sample_mask(spec.dims, mr, mask_seed);

        for (const auto& method : spec.methods) {
          ExperimentRecord r;
          r.method = method;
          r.dims = spec.dims;
          r.ranks_true = spec.ranks_true;
          r.mr = mr;
          r.snr_db = snr;
          r.seed = fit_seed;
          r.rse_val = r.psnr_val = r.air = r.var = kBlank;

          const auto t0 = std::chrono::steady_clock::now();
          try {
            if (method == "tr-vbi") {
              FitConfig cfg = spec.vbi;
              cfg.seed = fit_seed;
              r.r_init = static_cast<int>(resolved_r_init(cfg, spec.dims));
              auto [state, trace] = fit(data.noisy, obs, cfg);
              r.ranks_inferred = state.ranks();
              r.iters = static_cast<int>(trace.items.size());
              r.rse_val = rse(expected_reconstruction(state), data.clean);
              cell_ranks.push_back(r.ranks_inferred);
              cell_vbi_rows.push_back(records.size());
            } else if (method == "tr-als") {
              AlsOptions opt;
              opt.ranks = als_ranks;
              opt.ridge = spec.als_ridge;
              opt.max_sweeps = spec.als_max_sweeps;
              opt.tol = spec.als_tol;
              opt.seed = fit_seed;
              auto [cores, trace] = tr_als_fit(data.noisy, obs, opt);
              r.ranks_inferred = cores.ranks();
              r.iters = static_cast<int>(trace.rmse.size());
              r.rse_val = rse(tr_reconstruct(cores), data.clean);
            } else {
              throw std::invalid_argument("unknown method '" + method + "'");
            }
            cell_rse[method].push_back(r.rse_val);
          } catch (const std::exception& e) {
            r.failed = true;
            r.error = e.what();
            std::fprintf(stderr, "sweep: %s mr=%g rep=%d failed: %s\n",
                         method.c_str(), mr, rep, e.what());
          }
          r.wall_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
          records.push_back(std::move(r));
        }
      }

      if (!cell_ranks.empty()) {
        const RankStats stats = air_var(cell_ranks);
        for (size_t row : cell_vbi_rows) {
          records[row].air = stats.air;
          records[row].var = stats.var;
        }
      }
      if (log) {
        for (const auto& [method, vals] : cell_rse) {
          double mean = 0.0;
          for (double v : vals) mean += v;
          mean /= static_cast<double>(vals.size());
          double sd = 0.0;
          if (vals.size() > 1) {
            for (double v : vals) sd += (v - mean) * (v - mean);
            sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
          }
          (*log) << "cell mr=" << num(mr) << " snr="
                 << (snr ? num(*snr) : std::string("none")) << " " << method
                 << ": rse " << num(mean) << " +- " << num(sd) << " ("
                 << vals.size() << "/" << spec.reps << " ok)\n";
        }
      }
      ++cell_id;
    }
  }
  return records;
}

std::string csv_header() {
  return "method,dims,ranks_true,r_init,mr,snr_db,seed,ranks_inferred,rse,psnr,"
         "air,var,iters,wall_s";
}

std::string csv_row(const ExperimentRecord& r) {
  auto opt_num = [](double v) { return std::isnan(v) ? std::string() : num(v); };
  std::string row = r.method;
  row += ',';
  row += r.dims.str();
  row += ',';
  row += join_x(r.ranks_true);
  row += ',';
  if (r.r_init >= 0) row += std::to_string(r.r_init);
  row += ',';
  row += num(r.mr);
  row += ',';
  if (r.snr_db) row += num(*r.snr_db);
  row += ',';
  row += std::to_string(r.seed);
  row += ',';
  row += join_x(r.ranks_inferred);
  row += ',';
  row += opt_num(r.rse_val);
  row += ',';
  row += opt_num(r.psnr_val);
  row += ',';
  row += opt_num(r.air);
  row += ',';
  row += opt_num(r.var);
  row += ',';
  row += std::to_string(r.iters);
  row += ',';
  row += num(r.wall_s);
  return row;
}

void write_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << csv_header() << '\n';
  for (const auto& r : records) out << csv_row(r) << '\n';
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace trc
