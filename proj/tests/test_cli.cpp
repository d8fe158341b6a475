#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flexibit/bitpack.hpp"
#include "flexibit/cli.hpp"
#include "flexibit/config.hpp"

using namespace flexibit;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "flexibit");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("flexibit-" + tag + "-" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"run", "--machine", "Mobile-A"}).code == 2);
  CHECK(invoke({"run", "--machine", "Nowhere", "--model", "Bert"}).code == 2);
  const auto r = invoke({"run", "--manifest", "/nonexistent/run.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("config error") != std::string::npos);
  CHECK(invoke({"validate", "--inject-fault", "cosmic-ray"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("validate exits 0 when clean and 1 on an injected fault") {
  const auto ok = invoke({"validate", "--scope", "pe", "--max-bits", "6", "--exhaustive-bits", "5", "--samples", "50"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("0 mismatches") != std::string::npos);
  const auto bad = invoke({"validate", "--scope", "pe", "--max-bits", "5", "--exhaustive-bits", "5",
                           "--inject-fault", "implicit-one"});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("stage: implicit-one") != std::string::npos);
  const auto guard = invoke({"validate", "--scope", "pe", "--max-bits", "5", "--exhaustive-bits", "5",
                             "--inject-fault", "exponent-guard"});
  CHECK(guard.code == 1);
  CHECK(invoke({"validate", "--scope", "codec", "--max-bits", "20"}).code == 2);
}

TEST_CASE("run writes a stamped CSV and a summary") {
  TempDir dir("run");
  const auto r = invoke({"run", "--machine", "Mobile-A", "--model", "Bert", "--pair", "FP6:FP6", "--out",
                         dir.path().string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir.path() / "run.csv");
  CHECK(csv.rfind(std::string("# ") + kRunCsvSchema, 0) == 0);
  CHECK(csv.find("energy table: synthetic placeholder, not measured") != std::string::npos);
  std::istringstream lines(csv);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2 + 6);
  CHECK(fs::exists(dir.path() / "summary.txt"));
}

TEST_CASE("an empty pair list yields a header-only CSV") {
  TempDir dir("empty");
  write_text(dir.path() / "run.json",
             R"({"machine": ")" + std::string(FLEXIBIT_SOURCE_DIR) + R"(/configs/machines/mobile_a.json",
                 "model": ")" + std::string(FLEXIBIT_SOURCE_DIR) + R"(/configs/models/bert.json",
                 "pairs": [], "output_dir": "out"})");
  const auto r = invoke({"run", "--manifest", (dir.path() / "run.json").string()});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir.path() / "out" / "run.csv");
  std::istringstream lines(csv);
  std::string first, header, extra;
  std::getline(lines, first);
  std::getline(lines, header);
  CHECK(first.rfind("# ", 0) == 0);
  CHECK(header.rfind("model,layer,machine", 0) == 0);
  CHECK_FALSE(std::getline(lines, extra));
}

TEST_CASE("the output directory can be overridden from the environment") {
  TempDir dir("env");
  const auto target = dir.path() / "elsewhere";
  ::setenv("FLEXIBIT_OUT_DIR", target.c_str(), 1);
  const auto r = invoke({"run", "--machine", "Cloud-A", "--model", "Bert", "--pair", "FP8:FP4", "--out",
                         (dir.path() / "ignored").string()});
  ::unsetenv("FLEXIBIT_OUT_DIR");
  CHECK(r.code == 0);
  CHECK(fs::exists(target / "run.csv"));
  CHECK_FALSE(fs::exists(dir.path() / "ignored"));
}

TEST_CASE("identical runs are byte-identical regardless of thread count") {
  TempDir dir("det");
  const std::vector<std::string> common{"run", "--machine", "Mobile-A", "--machine", "Cloud-B", "--model", "Bert",
                                        "--pair", "proposed"};
  auto with = [&](const std::string& sub, const std::string& threads) {
    auto args = common;
    args.insert(args.end(), {"--threads", threads, "--out", (dir.path() / sub).string()});
    REQUIRE(invoke(args).code == 0);
    return slurp(dir.path() / sub / "run.csv");
  };
  const auto a = with("a", "4");
  const auto b = with("b", "4");
  const auto c = with("c", "1");
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("pack and unpack files round trip") {
  TempDir dir("pack");
  std::mt19937_64 rng(17);
  const auto fmt = FormatSpec::fp(2, 3);
  std::vector<std::uint64_t> elems(1000);
  for (auto& e : elems) e = rng() % 64;
  {
    std::ofstream os(dir.path() / "in.bin", std::ios::binary);
    write_padded(os, PaddedStream::from_elements(elems, fmt, 8));
  }
  const auto in = (dir.path() / "in.bin").string();
  const auto packed = (dir.path() / "x.fxbp").string();
  const auto back = (dir.path() / "back.bin").string();
  REQUIRE(invoke({"pack", in, packed, "--format", "FP6"}).code == 0);
  REQUIRE(invoke({"unpack", packed, back}).code == 0);
  CHECK(slurp(in) == slurp(back));
  CHECK(fs::file_size(packed) == kFxbpHeaderBytes + 750);
  CHECK(fs::file_size(in) == 1000);

  write_text(dir.path() / "empty.bin", "");
  REQUIRE(invoke({"pack", (dir.path() / "empty.bin").string(), packed, "--format", "FP6"}).code == 0);
  CHECK(fs::file_size(packed) == kFxbpHeaderBytes);

  write_text(dir.path() / "junk.fxbp", "NOTAFILE-----------");
  const auto bad = invoke({"unpack", (dir.path() / "junk.fxbp").string(), back});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("magic") != std::string::npos);
}

TEST_CASE("ablation CSV has one row per layer class") {
  const auto r = invoke({"ablate", "--machine", "Mobile-A", "--model", "Bert", "--pair", "FP6:FP6"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(rows == 1 + 6);
}
