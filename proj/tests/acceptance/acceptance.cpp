// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "cotflow/projection.hpp"
#include "cotflow/structure.hpp"

namespace fs = std::filesystem;
using namespace cotflow;
using json = nlohmann::json;

#ifndef COTFLOW_CLI_PATH
#error "COTFLOW_CLI_PATH must name the cotflow executable"
#endif
#ifndef COTFLOW_DATA_DIR
#error "COTFLOW_DATA_DIR must name the data directory"
#endif

namespace {

struct Check {
  bool ok = true;
  std::vector<std::string> notes;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int prec = 6) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << x;
  return ss.str();
}

struct ChildResult {
  int status = -1;
  long max_rss_kb = 0;
  std::string out;
};

// Runs the CLI with args, capturing stdout; rusage comes from wait4.
ChildResult run_cli(const std::vector<std::string>& args) {
  int pipefd[2];
  if (pipe(pipefd) != 0) return {};
  const pid_t pid = fork();
  if (pid == 0) {
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    std::vector<char*> argv;
    std::string exe = COTFLOW_CLI_PATH;
    argv.push_back(exe.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    execv(exe.c_str(), argv.data());
    _exit(127);
  }
  close(pipefd[1]);
  ChildResult r;
  char buf[4096];
  ssize_t n;
  while ((n = read(pipefd[0], buf, sizeof buf)) > 0) r.out.append(buf, size_t(n));
  close(pipefd[0]);
  int status = 0;
  struct rusage ru {};
  wait4(pid, &status, 0, &ru);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.max_rss_kb = ru.ru_maxrss;
  return r;
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// ---------------------------------------------------------------- criteria

Check entropy_suite() {
  Check c;
  const auto t0 = Clock::now();
  const std::vector<double> half{0.5, 0.5}, hot{1, 0, 0, 0, 0};
  c.require(std::abs(projection::entropy(half) - std::numbers::ln2) <= 1e-12, "H([0.5,0.5]) == ln 2");
  c.require(projection::entropy(hot) == 0.0, "H(one-hot) == 0");
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bounds_bad = 0, perm_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const size_t k = 2 + rng() % 9;
    std::vector<double> p(k);
    double s = 0;
    for (auto& x : p) s += (x = u(rng));
    for (auto& x : p) x /= s;
    const double h = projection::entropy(p);
    if (!(h >= 0.0 && h <= std::log(double(k)))) ++bounds_bad;
    auto q = p;
    std::shuffle(q.begin(), q.end(), rng);
    if (projection::entropy(q) != h) ++perm_bad;
  }
  c.require(bounds_bad == 0, "0 <= H <= ln k on 10000 vectors (" + std::to_string(bounds_bad) + " out of bounds)");
  c.require(perm_bad == 0, "exact permutation invariance (" + std::to_string(perm_bad) + " differ)");
  const double t = seconds_since(t0);
  c.require(t < 1.0, "runtime < 1 s");
  c.note("runtime " + fmt(t, 3) + " s");
  return c;
}

Check kde_suite() {
  Check c;
  const auto t0 = Clock::now();
  const std::vector<double> one{0.5}, at{0.5}, two{0.4, 0.6};
  const double peak = projection::kde_gaussian(one, 0.1, at).density[0];
  c.require(std::abs(peak - 1.0 / (0.1 * std::sqrt(2.0 * std::numbers::pi))) <= 1e-12, "single-sample peak");
  // high-precision oracle (mpmath, 50 digits): 2.419707245191433498
  const double pair = projection::kde_gaussian(two, 0.1, at).density[0];
  c.require(std::abs(pair - 2.419707245191433498) <= 1e-5, "two-sample value 2.41971");
  c.note("two-sample " + fmt(pair, 12));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto grid = projection::uniform_grid();
  int mass_bad = 0, sym_bad = 0;
  double min_mass = 2, max_mass = 0;
  for (int i = 0; i < 1000; ++i) {
    // interior: every sample lies in [3h, 1 - 3h]
    const double h = 0.01 + 0.09 * u(rng);
    std::vector<double> xs;
    const int half = 1 + int(rng() % 20);
    for (int k = 0; k < half; ++k) {
      const double d = (0.5 - 3 * h) * u(rng);
      xs.push_back(0.5 - d);
      xs.push_back(0.5 + d);
    }
    const auto curve = projection::kde_gaussian(xs, h, grid);
    const double m = projection::trapezoid_mass(curve);
    min_mass = std::min(min_mass, m);
    max_mass = std::max(max_mass, m);
    // upper bound allows floating-point rounding only; the exact integral is below 1
    if (!(m >= 0.95 && m <= 1.0 + 1e-12)) ++mass_bad;
    for (size_t g = 0; g < grid.size(); ++g) {
      const double a = curve.density[g], b = curve.density[grid.size() - 1 - g];
      if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a))) {
        ++sym_bad;
        break;
      }
    }
  }
  c.require(mass_bad == 0, "trapezoidal mass in [0.95, 1.0]");
  c.require(sym_bad == 0, "symmetry on 1000 symmetric sample sets");
  c.note("mass range [" + fmt(min_mass) + ", 1 + " + fmt(max_mass - 1.0, 3) + "]");
  const double t = seconds_since(t0);
  c.require(t < 5.0, "runtime < 5 s");
  c.note("runtime " + fmt(t, 3) + " s");
  return c;
}

Check improvement_table() {
  Check c;
  auto first_line = [](const std::string& s) { return s.substr(0, s.find('\n')); };
  const auto coin = run_cli({"improvement", "--standard", "0.4580", "--cot", "1.0"});
  c.require(coin.status == 0 && first_line(coin.out) == "+118.34%", "Coin Flip prints +118.34%");
  c.note("coin flip " + first_line(coin.out));
  const auto ll = run_cli({"improvement", "--standard", "0.0", "--cot", "0.4496"});
  c.require(ll.status == 0 && first_line(ll.out) == "+inf", "Last Letter prints +inf");

  struct Row {
    const char* name;
    const char* standard;
    const char* cot;
    const char* printed;
    bool should_match;
  };
  const Row rows[] = {{"AQuA", "0.3110", "0.4961", "+59.49%", false},
                      {"Sports", "0.7497", "0.9395", "+25.30%", false},
                      {"Coin Flip", "0.4580", "1.000", "+118.34%", true},
                      {"GSM8K", "0.1774", "0.7771", "+338.03%", false},
                      {"Date", "0.4417", "0.7100", "+67.4%", false},
                      {"Last Letter", "0.0", "0.4496", "+∞", true}};
  for (const auto& r : rows) {
    const auto res = run_cli({"improvement", "--standard", r.standard, "--cot", r.cot, "--printed", r.printed});
    const bool flagged = res.out.find("MISMATCH") != std::string::npos;
    const bool matched = res.out.find(": matches") != std::string::npos;
    c.require(res.status == 0 && (r.should_match ? matched : flagged),
              std::string(r.name) + (r.should_match ? " matches" : " is flagged"));
    const auto nl = res.out.find('\n');
    c.note(std::string(r.name) + ": " + (nl == std::string::npos ? res.out : res.out.substr(nl + 1, res.out.size() - nl - 2)));
  }
  return c;
}

Check adherence_suite() {
  Check c;
  const auto t0 = Clock::now();
  const auto corpus = load_json(fs::path(COTFLOW_DATA_DIR) / "exemplars" / "prompt_exemplars.json");
  const auto& specs = structure::EntitySpecs::builtin();
  size_t cot_total = 0, cot_ok = 0, std_total = 0, std_ok = 0;
  std::vector<std::string> misses;
  for (const auto& ds : corpus.at("datasets")) {
    const auto& spec = specs.for_dataset(ds.at("dataset").get<std::string>());
    for (const char* kind : {"cot", "standard"}) {
      for (const auto& ex : ds.at(kind)) {
        const auto v = structure::adherence(ex.at("question").get<std::string>(), "",
                                            ex.at("answer").get<std::string>(), spec);
        const bool cot = std::string(kind) == "cot";
        (cot ? cot_total : std_total)++;
        if (v.adherent == cot) {
          (cot ? cot_ok : std_ok)++;
        } else {
          misses.push_back(ds.at("dataset").get<std::string>() + "/" + kind);
        }
      }
    }
  }
  c.require(cot_total > 0 && cot_ok == cot_total, "every CoT exemplar adherent");
  c.require(std_total > 0 && std_ok == std_total, "every Standard exemplar non-adherent");
  c.note("CoT adherent " + std::to_string(cot_ok) + "/" + std::to_string(cot_total) + ", Standard non-adherent " +
         std::to_string(std_ok) + "/" + std::to_string(std_total));
  for (const auto& m : misses) c.note("miss " + m);
  const auto ev = structure::detect_reasoning_steps(
      "The coin was flipped by Maybelle. So the coin was flipped 1 time, which is an odd number. The coin started "
      "heads up, so after an odd number of flips, it will be tails up. So the answer is no.",
      {}, specs.for_dataset("coin_flip"));
  c.require(ev.verb_count && *ev.verb_count == 5, "Maybelle verb count == 5");
  c.note("Maybelle verb count " + (ev.verb_count ? std::to_string(*ev.verb_count) : std::string("none")));
  const double t = seconds_since(t0);
  c.require(t < 1.0, "runtime < 1 s");
  c.note("runtime " + fmt(t, 3) + " s");
  return c;
}

Check synth_end_to_end(const fs::path& work) {
  Check c;
  const auto t0 = Clock::now();
  const auto dir = work / "e2e";
  fs::create_directories(dir);
  json spec = {{"num_records", 10000},
               {"num_steps", 8},
               {"num_layers", 6},
               {"ffn_width", 512},
               {"rng_seed", 99},
               {"record_mean_jitter", 3},
               {"planted_layer_means",
                {{"cot", {100.25, 80.5, 60, 40.125, 20, 10}}, {"standard", {90, 85.75, 60, 30, 25.5, 5}}}},
               {"planted_imitation",
                {{"number", {{"prompt", 0.25}, {"question", 0.5}}},
                 {"action", {{"prompt", 0.375}, {"question", 0.125}}},
                 {"time", {{"prompt", 0.6}, {"question", 0.2}}}}},
               {"occurrences_per_category", 8},
               {"planted_adherent_fraction", 0.5}};
  std::ofstream(dir / "spec.json") << spec.dump();
  c.require(run_cli({"synth", (dir / "spec.json").string(), "-o", (dir / "s").string()}).status == 0, "synth ran");
  const auto cot = (dir / "s" / "cot.trc").string(), std_trc = (dir / "s" / "std.trc").string();
  c.require(run_cli({"analyze", "activation", "--pair", cot, std_trc, "-o", (dir / "act").string()}).status == 0,
            "analyze activation ran");
  c.require(run_cli({"analyze", "structure", cot, "-o", (dir / "st").string()}).status == 0, "analyze structure ran");
  c.require(run_cli({"analyze", "keywords", cot, "-o", (dir / "kw").string()}).status == 0, "analyze keywords ran");
  const double t = seconds_since(t0);
  if (!c.ok) return c;

  const auto truth = load_json(dir / "s" / "ground_truth.json");
  const auto act = load_json(dir / "act" / "analysis.json").at("results");
  c.require(act.at("diff") == truth.at("layer_diff"), "layer differences recovered exactly");
  // realized means are round(mean * T) / T; with T = 8 every planted value above is exact
  std::vector<double> planted_diff;
  for (size_t l = 0; l < 6; ++l) {
    planted_diff.push_back(spec["planted_layer_means"]["cot"][l].get<double>() -
                           spec["planted_layer_means"]["standard"][l].get<double>());
  }
  c.require(act.at("diff").get<std::vector<double>>() == planted_diff, "diff equals planted cot - standard");

  const auto st = load_json(dir / "st" / "analysis.json").at("results").at("runs").at(0);
  c.require(st.at("imitation_count") == 5000, "Imitation Count == 5000");
  c.note("imitation count " + st.at("imitation_count").dump());

  const auto kw = load_json(dir / "kw" / "analysis.json").at("results").at("runs").at(0);
  const double tol = truth.at("imitation_tolerance").get<double>();
  double worst = 0;
  for (const auto& cell : kw.at("cells")) {
    const std::string cat = cell.at("category"), origin = cell.at("origin");
    if (!spec["planted_imitation"].contains(cat)) continue;
    const double planted = spec["planted_imitation"][cat][origin].get<double>();
    worst = std::max(worst, std::abs(cell.at("mean").get<double>() - planted));
  }
  c.require(worst <= tol, "imitation proportions within 1/(2k)");
  c.note("worst proportion gap " + fmt(worst) + " (tolerance " + fmt(tol) + ")");
  c.require(t < 30.0, "runtime < 30 s");
  c.note("runtime " + fmt(t, 3) + " s");
  return c;
}

Check pearson_suite() {
  Check c;
  std::vector<structure::CorrelationPoint> up, down;
  for (int i = 0; i < 7; ++i) {
    up.push_back({double(i), 2.0 * i + 1.0});
    down.push_back({double(i), -double(i)});
  }
  c.require(std::abs(structure::adherence_accuracy_correlation(up).r - 1.0) <= 1e-12, "r == 1 on y = 2x + 1");
  c.require(std::abs(structure::adherence_accuracy_correlation(down).r + 1.0) <= 1e-12, "r == -1 on y = -x");
  // oracle (mpmath): 0.6546536707079771438
  const double r3 = structure::adherence_accuracy_correlation({{1, 0.2}, {2, 0.5}, {3, 0.4}}).r;
  c.require(std::abs(r3 - 0.6546536707079771438) <= 1e-3, "3-point r within 1e-3");
  c.note("3-point r " + fmt(r3, 12));
  bool clean = false;
  try {
    structure::adherence_accuracy_correlation({{2, 0.1}, {2, 0.4}, {2, 0.9}});
  } catch (const std::domain_error& e) {
    clean = std::string(e.what()) == "undefined correlation";
  }
  c.require(clean, "zero variance raises a clean error");
  return c;
}

Check streaming(const fs::path& work) {
  Check c;
  const auto dir = work / "stream";
  fs::create_directories(dir);
  json spec = {{"num_records", 8400}, {"num_steps", 300}, {"num_layers", 100}, {"ffn_width", 14336},
               {"rng_seed", 3},       {"record_mean_jitter", 0}};
  std::vector<double> cm, sm;
  for (int l = 0; l < 100; ++l) {
    cm.push_back(1000 + 7 * l);
    sm.push_back(1100 + 5 * l);
  }
  spec["planted_layer_means"] = {{"cot", cm}, {"standard", sm}};
  spec["planted_imitation"] = {{"number", {{"prompt", 0.25}, {"question", 0.25}}}};
  std::ofstream(dir / "spec.json") << spec.dump();
  const auto s = run_cli({"synth", (dir / "spec.json").string(), "-o", (dir / "s").string()});
  c.require(s.status == 0, "synth ran");
  if (!c.ok) return c;
  const auto cot = dir / "s" / "cot.trc";
  const double gb = double(fs::file_size(cot) + fs::file_size(dir / "s" / "cot.ctac")) / 1e9;
  c.require(gb >= 1.0, "CoT trace with sidecar is at least 1 GB");
  c.note("cot trace + sidecar " + fmt(gb, 4) + " GB");

  const auto t0 = Clock::now();
  const auto a = run_cli({"analyze", "activation", "--pair", cot.string(), (dir / "s" / "std.trc").string(), "-o",
                          (dir / "out").string()});
  const double t = seconds_since(t0);
  c.require(a.status == 0, "analyze activation ran");
  const double mb = double(a.max_rss_kb) / 1024.0;
  c.require(mb < 256.0, "peak RSS < 256 MB");
  c.note("peak RSS " + fmt(mb, 4) + " MB, " + fmt(t, 3) + " s");
  if (a.status == 0) {
    const auto res = load_json(dir / "out" / "analysis.json").at("results");
    c.require(res.at("diff") == load_json(dir / "s" / "ground_truth.json").at("layer_diff"), "planted diff recovered");
  }
  fs::remove_all(dir);
  return c;
}

}  // namespace

// An optional argument runs only the criteria whose name contains it.
int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const auto work = fs::temp_directory_path() / ("cotflow_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria{
      {"entropy suite", entropy_suite},
      {"kde suite", kde_suite},
      {"relative improvement table arithmetic", improvement_table},
      {"adherence over the exemplar corpus", adherence_suite},
      {"synthetic oracle end to end", [&] { return synth_end_to_end(work); }},
      {"pearson suite", pearson_suite},
      {"streaming memory", [&] { return streaming(work); }},
  };
  int failed = 0;
  size_t ran = 0;
  for (const auto& cr : criteria) {
    if (std::string(cr.name).find(filter) == std::string::npos) continue;
    ++ran;
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.note(std::string("exception: ") + e.what());
    }
    failed += !c.ok;
    std::cout << (c.ok ? "PASS " : "FAIL ") << cr.name;
    for (size_t i = 0; i < c.notes.size(); ++i) std::cout << (i ? "; " : " | ") << c.notes[i];
    std::cout << std::endl;
  }
  fs::remove_all(work);
  std::cout << (ran - size_t(failed)) << "/" << ran << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
