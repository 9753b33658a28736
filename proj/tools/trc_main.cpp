#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "trc/dtf.hpp"
#include "trc/image.hpp"
#include "trc/kv.hpp"
#include "trc/metrics.hpp"
#include "trc/model.hpp"
#include "trc/rng.hpp"
#include "trc/sweep.hpp"
#include "trc/synth.hpp"
#include "trc/tr_als.hpp"
#include "trc/tr_ops.hpp"
#include "trc/vbi.hpp"

namespace {

using nlohmann::ordered_json;

//! flag misuse detected after parsing; maps to exit code 1
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<trc::index_t> parse_extents(const std::string& s) {
  std::vector<trc::index_t> out;
  if (s.find('x') != std::string::npos) {
    for (long long d : trc::parse_dims(s)) out.push_back(d);
    return out;
  }
  for (const auto& tok : trc::split_list(s)) out.push_back(std::stoll(tok));
  if (out.empty()) throw UsageError("empty dimension list");
  return out;
}

std::map<std::string, std::string> collect_sets(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

ordered_json ranks_json(const std::vector<trc::index_t>& ranks) {
  ordered_json a = ordered_json::array();
  for (trc::index_t r : ranks) a.push_back(r);
  return a;
}

struct SynthArgs {
  std::string dims, rank, out = "synth";
  double mr = 0.0;
  std::optional<double> snr;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  const trc::Shape shape{parse_extents(a.dims)};
  const auto ranks = parse_extents(a.rank);
  trc::SynthData data = trc::gen_synthetic(shape, ranks, a.snr, a.seed);
  trc::IndexSet obs = trc::sample_mask(shape, a.mr, trc::Rng::mix(a.seed, 0x6d61736b));
  trc::write_dtf(a.out + ".dtf", data.noisy);
  trc::write_dtf(a.out + "_clean.dtf", data.clean);
  trc::write_msk(a.out + ".msk", obs);
  std::cout << a.out << ".dtf " << shape.str() << ", " << a.out << ".msk observed "
            << obs.count() << "/" << shape.numel() << "\n";
  return 0;
}

struct CompleteArgs {
  std::string input, image, mask, truth, method = "tr-vbi";
  std::string tensorize_shape, out, report;
  std::vector<std::string> sets;
  double mr = -1.0;
  std::uint64_t mask_seed = 0;
  std::uint64_t seed = 0;
};

struct AlsCliConfig {
  trc::AlsOptions opt;
  bool have_ranks = false;
};

AlsCliConfig parse_als_sets(const std::map<std::string, std::string>& kv) {
  AlsCliConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "ranks") {
      c.opt.ranks = parse_extents(value);
      c.have_ranks = true;
    } else if (key == "ridge") {
      c.opt.ridge = std::stod(value);
    } else if (key == "max_sweeps") {
      c.opt.max_sweeps = std::stoi(value);
    } else if (key == "tol") {
      c.opt.tol = std::stod(value);
    } else if (key == "seed") {
      c.opt.seed = std::stoull(value);
    } else {
      throw UsageError("tr-als does not understand --set " + key);
    }
  }
  return c;
}

int run_complete(const CompleteArgs& a) {
  if (a.input.empty() == a.image.empty())
    throw UsageError("complete needs exactly one of --input / --image");
  if (a.method != "tr-vbi" && a.method != "tr-als")
    throw UsageError("unknown method '" + a.method + "'");
  const auto sets = collect_sets(a.sets);

  trc::DenseTensor t;
  trc::IndexSet obs;
  trc::DenseTensor original;  // image mode ground truth
  trc::Shape image_shape;
  const bool image_mode = !a.image.empty();

  if (image_mode) {
    original = trc::load_image(a.image);
    image_shape = original.shape();
    if (!a.mask.empty()) {
      obs = trc::read_msk(a.mask);
      if (!(obs.shape() == image_shape))
        throw UsageError("mask shape does not match the image");
    } else if (a.mr >= 0.0) {
      obs = trc::sample_mask(image_shape, a.mr, a.mask_seed);
    } else {
      throw UsageError("image mode needs --mask or --mr");
    }
    trc::Shape high = image_shape;
    if (a.tensorize_shape == "preset")
      high = trc::tensorize_preset(image_shape);
    else if (!a.tensorize_shape.empty())
      high = trc::Shape{parse_extents(a.tensorize_shape)};
    t = trc::tensorize(original, high);
    obs = trc::IndexSet(high, std::vector<trc::index_t>(obs.flat()));
  } else {
    if (a.mask.empty()) throw UsageError("--input needs --mask");
    t = trc::read_dtf(a.input);
    obs = trc::read_msk(a.mask);
    if (!(obs.shape() == t.shape()))
      throw UsageError("mask shape does not match the tensor");
  }

  ordered_json report;
  report["method"] = a.method;
  ordered_json trace = ordered_json::array();
  trc::DenseTensor recovered;
  std::vector<trc::index_t> ranks_inferred;
  int iters = 0;

  const auto t0 = std::chrono::steady_clock::now();
  if (a.method == "tr-vbi") {
    trc::FitConfig cfg;
    cfg.seed = a.seed;
    cfg = trc::apply_config(cfg, sets);
    auto [state, fit_trace] = trc::fit(t, obs, cfg);
    ranks_inferred = state.ranks();
    iters = static_cast<int>(fit_trace.items.size());
    recovered = trc::complete(state, t, obs, cfg.overwrite_observed);
    ordered_json config;
    config["r_init"] = cfg.r_init;
    config["max_iters"] = cfg.max_iters;
    config["tol"] = cfg.tol;
    config["prune_threshold"] = cfg.prune_threshold;
    config["prune_by_lambda"] = cfg.prune_by_lambda;
    config["prune_burn_in"] = cfg.prune_burn_in;
    config["seed"] = cfg.seed;
    config["priors"] = {{"a", cfg.priors.a}, {"b", cfg.priors.b},
                        {"c", cfg.priors.c}, {"d", cfg.priors.d}};
    config["overwrite_observed"] = cfg.overwrite_observed;
    report["config"] = config;
    for (const auto& it : fit_trace.items) {
      ordered_json row;
      row["iter"] = it.iter;
      row["e_tau"] = it.e_tau;
      row["ranks"] = ranks_json(it.ranks);
      row["obs_rmse"] = it.obs_rmse;
      trace.push_back(row);
    }
  } else {
    AlsCliConfig c = parse_als_sets(sets);
    if (!c.have_ranks) throw UsageError("tr-als needs --set ranks=R (or RxRx..)");
    if (a.seed != 0 && sets.find("seed") == sets.end()) c.opt.seed = a.seed;
    auto [cores, fit_trace] = trc::tr_als_fit(t, obs, c.opt);
    ranks_inferred = cores.ranks();
    iters = static_cast<int>(fit_trace.rmse.size());
    recovered = trc::tr_reconstruct(cores);
    for (trc::index_t flat : obs.flat()) recovered[flat] = t[flat];
    ordered_json config;
    config["ranks"] = ranks_json(c.opt.ranks);
    config["ridge"] = c.opt.ridge;
    config["max_sweeps"] = c.opt.max_sweeps;
    config["tol"] = c.opt.tol;
    config["seed"] = c.opt.seed;
    report["config"] = config;
    for (size_t i = 0; i < fit_trace.rmse.size(); ++i) {
      ordered_json row;
      row["iter"] = static_cast<int>(i + 1);
      row["e_tau"] = nullptr;
      row["ranks"] = ranks_json(ranks_inferred);
      row["obs_rmse"] = fit_trace.rmse[i];
      trace.push_back(row);
    }
  }
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  report["ranks_inferred"] = ranks_json(ranks_inferred);
  if (image_mode) {
    recovered = trc::detensorize(recovered, image_shape);
    report["rse"] = trc::rse(recovered, original);
    report["psnr"] = trc::psnr(recovered, original, 1.0);
    if (!a.out.empty()) trc::save_image(recovered, a.out);
  } else {
    if (!a.truth.empty()) {
      trc::DenseTensor truth = trc::read_dtf(a.truth);
      report["rse"] = trc::rse(recovered, truth);
    }
    if (!a.out.empty()) trc::write_dtf(a.out, recovered);
  }
  report["iters"] = iters;
  report["wall_s"] = wall_s;
  report["trace"] = trace;

  if (a.report.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream out(a.report);
    if (!out) throw std::runtime_error("cannot open " + a.report);
    out << report.dump(2) << "\n";
  }
  return 0;
}

struct BenchArgs {
  std::string spec_path, out;
};

int run_bench(const BenchArgs& a) {
  trc::SweepSpec spec = trc::parse_sweep_spec(trc::read_kv_file(a.spec_path));
  auto records = trc::run_sweep(spec, &std::cout);
  std::string out = !a.out.empty() ? a.out : spec.out;
  if (out.empty()) {
    std::cout << trc::csv_header() << "\n";
    for (const auto& r : records) std::cout << trc::csv_row(r) << "\n";
  } else {
    trc::write_csv(records, out);
    std::cout << records.size() << " records -> " << out << "\n";
  }
  return 0;
}

int run_info(const std::vector<std::string>& files) {
  for (const auto& path : files) {
    if (std::filesystem::is_directory(path)) {
      std::ifstream in(path + "/state.json");
      if (!in) throw std::runtime_error(path + ": no state.json");
      const auto meta = ordered_json::parse(in);
      std::cout << path << ": checkpoint dims " << meta["dims"].dump() << " ranks "
                << meta["ranks"].dump() << " iteration " << meta["iteration"]
                << "\n";
      continue;
    }
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".dtf") {
      const trc::DenseTensor t = trc::read_dtf(path);
      std::cout << path << ": dtf " << t.shape().str() << " (" << t.numel()
                << " entries)\n";
    } else if (ext == ".msk") {
      const trc::IndexSet obs = trc::read_msk(path);
      std::cout << path << ": mask " << obs.shape().str() << " observed "
                << obs.count() << "/" << obs.shape().numel() << "\n";
    } else if (ext == ".png") {
      const trc::DenseTensor t = trc::load_image(path);
      std::cout << path << ": png " << t.shape()[0] << "x" << t.shape()[1]
                << " rgb8\n";
    } else {
      throw std::runtime_error(path + ": unknown file type");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensor ring completion toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic low-rank tensor");
  synth_cmd->add_option("--dims", synth.dims, "extents, e.g. 10,10,10,10")->required();
  synth_cmd->add_option("--rank", synth.rank, "ring ranks, one value or per bond")
      ->required();
  double snr_val = 0.0;
  auto* snr_opt = synth_cmd->add_option("--snr", snr_val, "SNR in dB; omit for noiseless");
  synth_cmd->add_option("--mr", synth.mr, "missing ratio in [0,1)");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--out", synth.out, "output prefix");

  CompleteArgs comp;
  auto* comp_cmd = app.add_subcommand("complete", "fit a ring model and fill in entries");
  comp_cmd->add_option("--input", comp.input, "dense tensor file (.dtf)");
  comp_cmd->add_option("--image", comp.image, "RGB PNG input");
  comp_cmd->add_option("--mask", comp.mask, "observation mask (.msk)");
  comp_cmd->add_option("--mr", comp.mr, "image mode: sample a mask at this missing ratio");
  comp_cmd->add_option("--mask-seed", comp.mask_seed, "seed for --mr sampling");
  comp_cmd->add_option("--tensorize", comp.tensorize_shape,
                       "image mode: 'preset' or explicit shape, e.g. 4x4x4x4x4x4x3");
  comp_cmd->add_option("--method", comp.method, "tr-vbi (default) or tr-als");
  comp_cmd->add_option("--set", comp.sets, "config override key=value, repeatable");
  comp_cmd->add_option("--seed", comp.seed, "fit seed (shorthand for --set seed=)");
  comp_cmd->add_option("--truth", comp.truth, "clean tensor for RSE reporting");
  comp_cmd->add_option("--out", comp.out, "recovered tensor/image path");
  comp_cmd->add_option("--report", comp.report, "JSON report path (default: stdout)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "run an experiment sweep");
  bench_cmd->add_option("--spec", bench.spec_path, "key=value sweep file")->required();
  bench_cmd->add_option("--out", bench.out, "CSV path (overrides spec 'out')");

  std::vector<std::string> info_files;
  auto* info_cmd = app.add_subcommand("info", "print file headers");
  info_cmd->add_option("files", info_files, "dtf/msk/png files or checkpoint dirs")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) {
      if (*snr_opt) synth.snr = snr_val;
      return run_synth(synth);
    }
    if (*comp_cmd) return run_complete(comp);
    if (*bench_cmd) return run_bench(bench);
    if (*info_cmd) return run_info(info_files);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
