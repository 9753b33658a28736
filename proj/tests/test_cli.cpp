#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "trc/dtf.hpp"
#include "trc/image.hpp"
#include "trc/rng.hpp"
#include "trc/tensor.hpp"

using namespace trc;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

const std::string kBin = TRC_CLI_BIN;

fs::path workdir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "trc_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = kBin + " " + args + " > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  return WIFEXITED(st) ? WEXITSTATUS(st) : -2;
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

}  // namespace

TEST_CASE("synth writes tensor, clean twin and mask") {
  fs::path dir = workdir();
  std::string prefix = (dir / "s").string();
  CHECK(run("synth --dims 4x4x4 --rank 2 --snr 20 --mr 0.3 --seed 5 --out " + prefix) == 0);

  DenseTensor noisy = read_dtf(prefix + ".dtf");
  DenseTensor clean = read_dtf(prefix + "_clean.dtf");
  IndexSet mask = read_msk(prefix + ".msk");
  CHECK(noisy.shape() == Shape{4, 4, 4});
  CHECK(clean.shape() == Shape{4, 4, 4});
  CHECK(mask.shape() == Shape{4, 4, 4});
  CHECK(mask.count() == 45);  // round(0.7 * 64)
  bool differ = false;
  for (index_t f = 0; f < noisy.numel(); ++f) differ |= noisy[f] != clean[f];
  CHECK(differ);

  CHECK(run("info " + prefix + ".dtf " + prefix + ".msk") == 0);
}

TEST_CASE("complete reports least-squares runs deterministically") {
  fs::path dir = workdir();
  std::string prefix = (dir / "s").string();
  REQUIRE(fs::exists(prefix + ".dtf"));

  std::string common = "complete --input " + prefix + ".dtf --mask " + prefix +
                       ".msk --method tr-als --set ranks=2 --set max_sweeps=5 "
                       "--seed 9 --truth " + prefix + "_clean.dtf";
  std::string rec = (dir / "rec.dtf").string();
  CHECK(run(common + " --out " + rec + " --report " + (dir / "r1.json").string()) == 0);
  CHECK(run(common + " --report " + (dir / "r2.json").string()) == 0);

  json r1 = load_json(dir / "r1.json");
  json r2 = load_json(dir / "r2.json");
  CHECK(r1["method"] == "tr-als");
  CHECK(r1["ranks_inferred"] == json::array({2, 2, 2}));
  CHECK(r1["rse"].is_number());
  CHECK(r1["rse"].get<double>() < 1.5);
  CHECK(r1["iters"].get<int>() <= 5);
  CHECK(r1["trace"].is_array());
  CHECK_FALSE(r1["trace"].empty());

  r1.erase("wall_s");
  r2.erase("wall_s");
  CHECK(r1 == r2);

  // observed entries are pasted back into the recovered tensor
  DenseTensor noisy = read_dtf(prefix + ".dtf");
  IndexSet mask = read_msk(prefix + ".msk");
  DenseTensor out = read_dtf(rec);
  for (index_t f : mask.flat()) CHECK(out[f] == noisy[f]);
}

TEST_CASE("complete runs the variational path") {
  fs::path dir = workdir();
  std::string prefix = (dir / "s").string();
  std::string report = (dir / "rv.json").string();
  CHECK(run("complete --input " + prefix + ".dtf --mask " + prefix +
            ".msk --set max_iters=3 --set r_init=3 --seed 9 --report " + report) == 0);
  json r = load_json(report);
  CHECK(r["method"] == "tr-vbi");
  REQUIRE(r["ranks_inferred"].is_array());
  CHECK(r["ranks_inferred"].size() == 3);
  CHECK(r["trace"].size() == 3);
  CHECK(r["trace"][0].contains("e_tau"));
  CHECK(r["config"]["max_iters"] == 3);
}

TEST_CASE("image completion round trips through tensorization") {
  fs::path dir = workdir();
  DenseTensor img(Shape{8, 8, 3});
  Rng rng(17);
  for (index_t f = 0; f < img.numel(); ++f)
    img[f] = static_cast<double>(rng.index(256)) / 255.0;
  std::string png = (dir / "in.png").string();
  save_image(img, png);

  std::string rec = (dir / "rec.png").string();
  CHECK(run("complete --image " + png + " --mr 0.5 --mask-seed 3 --tensorize 4x4x4x3 "
            "--method tr-als --set ranks=2 --set max_sweeps=3 --seed 4 --out " + rec +
            " --report " + (dir / "ri.json").string()) == 0);
  DenseTensor out = load_image(rec);
  CHECK(out.shape() == Shape{8, 8, 3});
}

TEST_CASE("bench runs a sweep spec file") {
  fs::path dir = workdir();
  fs::path spec = dir / "sweep.txt";
  fs::path csv = dir / "runs.csv";
  std::ofstream(spec) << "method=tr-als\n"
                      << "dims=4x4x4\n"
                      << "rank=2\n"
                      << "mr=0.5\n"
                      << "snr=20\n"
                      << "reps=2\n"
                      << "seed=3\n"
                      << "als_max_sweeps=4\n";
  CHECK(run("bench --spec " + spec.string() + " --out " + csv.string()) == 0);
  std::ifstream in(csv);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("method,", 0) == 0);
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("exit codes distinguish usage from runtime failures") {
  fs::path dir = workdir();
  CHECK(run("complete --bogus-flag") == 1);
  CHECK(run("complete --mask " + (dir / "s.msk").string()) == 1);  // no input given
  CHECK(run("complete --input " + (dir / "missing.dtf").string() + " --mask " +
            (dir / "s.msk").string()) == 2);
  CHECK(run("info " + (dir / "missing.dtf").string()) == 2);
}
