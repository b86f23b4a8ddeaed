// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

// cotflow: validate, synthesize, analyze and report on generation traces.
// Exit status: 0 success, 1 data error, 2 usage error.

#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cotflow/analysis.hpp"
#include "cotflow/report.hpp"
#include "cotflow/synth.hpp"
#include "cotflow/trace_io.hpp"

namespace fs = std::filesystem;
using namespace cotflow;

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void print_errors(const std::vector<RecordError>& errors) {
  for (const auto& e : errors) {
    std::cerr << "line " << e.line;
    if (!e.id.empty()) std::cerr << " record " << e.id;
    std::cerr << ": " << e.message << "\n";
  }
}

int cmd_validate(const fs::path& trace) {
  const auto file = read_trace_file(trace, {.strict = false, .load_activations = true, .validate = true});
  print_errors(file.errors);
  if (!file.errors.empty()) {
    std::cerr << trace.string() << ": " << file.errors.size() << " error(s)\n";
    return kDataError;
  }
  std::cout << trace.string() << ": " << file.records.size() << " records valid\n";
  return kOk;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out) {
  const auto spec = synth::SynthSpec::load(spec_path);
  const auto res = synth::synth_traces(spec, out);
  std::cout << res.cot_trace.string() << "\n" << res.standard_trace.string() << "\n" << res.ground_truth.string() << "\n";
  return kOk;
}

struct AnalyzeArgs {
  std::string kind;
  std::vector<std::string> traces;
  std::vector<std::string> pair;
  std::string lexicon, entity_spec, bandwidth, weighting, config;
  int grid_size = 0;
  bool lenient = false;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a) {
  analysis::Kind kind;
  try {
    kind = analysis::parse_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::vector<fs::path> traces(a.traces.begin(), a.traces.end());
  if (!a.pair.empty()) {
    if (kind != analysis::Kind::activation) throw UsageError("--pair applies to the activation analysis");
    if (!traces.empty()) throw UsageError("give either --pair or positional traces");
    traces.assign(a.pair.begin(), a.pair.end());
  }
  if (kind == analysis::Kind::activation && traces.size() != 2) {
    throw UsageError("activation analysis needs --pair <cot.trc> <std.trc>");
  }
  if (traces.empty()) throw UsageError("no input traces");

  nlohmann::json cli = nlohmann::json::object();
  if (!a.lexicon.empty()) cli["lexicon"] = a.lexicon;
  if (!a.entity_spec.empty()) cli["entity_spec"] = a.entity_spec;
  if (!a.bandwidth.empty()) {
    if (a.bandwidth == "silverman") {
      cli["bandwidth"] = "silverman";
    } else {
      double h = 0;
      const auto* end = a.bandwidth.data() + a.bandwidth.size();
      auto [p, ec] = std::from_chars(a.bandwidth.data(), end, h);
      if (ec != std::errc() || p != end || !(h > 0)) throw UsageError("--bandwidth must be a positive number or silverman");
      cli["bandwidth"] = h;
    }
  }
  if (a.grid_size) cli["grid_size"] = a.grid_size;
  if (!a.weighting.empty()) cli["weighting"] = a.weighting;
  if (a.lenient) cli["strict"] = false;
  const auto config = a.config.empty() ? Config::from_environment(cli) : Config::resolve(cli, fs::path(a.config));

  const auto options = analysis::Options::from_config(config);
  const auto out = analysis::analyze(kind, traces, options);
  print_errors(out.record_errors);
  analysis::write_output(out, a.out, "analysis.json");
  std::cout << (fs::path(a.out) / "analysis.json").string() << "\n";
  for (const auto& [name, body] : out.files) std::cout << (fs::path(a.out) / name).string() << "\n";
  return kOk;
}

int cmd_report(const std::vector<std::string>& dirs, const std::vector<std::string>& sections, const fs::path& out) {
  for (const auto& s : sections) {
    const auto& names = report::section_names();
    if (std::find(names.begin(), names.end(), s) == names.end()) throw UsageError("unknown section '" + s + "'");
  }
  const auto bundle = report::build_report(std::vector<fs::path>(dirs.begin(), dirs.end()), sections);
  analysis::write_output(bundle, out, "summary.json");
  std::cout << (out / "summary.json").string() << "\n";
  for (const auto& [name, body] : bundle.files) std::cout << (out / name).string() << "\n";
  return kOk;
}

double parse_accuracy(const std::string& s, const char* flag) {
  double x = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size()) throw UsageError(std::string(flag) + " must be a number");
  return x;
}

int cmd_improvement(const std::string& standard, const std::string& cot, const std::string& printed) {
  const double s = parse_accuracy(standard, "--standard");
  const double c = parse_accuracy(cot, "--cot");
  Improvement imp;
  try {
    imp = relative_improvement(s, c);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const std::domain_error& e) {
    std::cerr << "improvement undefined: " << e.what() << "\n";
    return kDataError;
  }
  std::cout << imp.render() << "\n";
  if (!printed.empty()) {
    const auto audit = audit_improvement(standard, cot, printed);
    std::cout << "printed " << audit.printed << ": ";
    if (audit.matches) {
      std::cout << "matches\n";
    } else {
      std::cout << "MISMATCH, recomputed " << audit.recomputed.render() << "; "
                << (audit.attainable ? "attainable" : "not attainable")
                << " from accuracies that round to the inputs";
      if (!audit.recomputed.infinite) {
        std::cout << " (range " << audit.attainable_low << "% to " << audit.attainable_high << "%)";
      }
      std::cout << "\n";
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cotflow: analyses of chain-of-thought generation traces"};
  app.require_subcommand(1);

  std::string validate_trace;
  auto* validate = app.add_subcommand("validate", "Check a trace file and its sidecar");
  validate->add_option("trace", validate_trace, "Trace file")->required();

  std::string synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic CoT/Standard trace pair with ground truth");
  synth->add_option("spec", synth_spec, "Synth spec JSON")->required();
  synth->add_option("-o,--out", synth_out, "Output directory")->required();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Run one analysis over trace files");
  analyze->add_option("kind", aa.kind, "keywords | structure | projection | activation")->required();
  analyze->add_option("traces", aa.traces, "Trace files");
  analyze->add_option("--pair", aa.pair, "CoT and Standard traces for the activation analysis")->expected(2);
  analyze->add_option("--lexicon", aa.lexicon, "Test-point lexicon JSON");
  analyze->add_option("--entity-spec", aa.entity_spec, "Entity spec JSON");
  analyze->add_option("--bandwidth", aa.bandwidth, "KDE bandwidth, a number or 'silverman'");
  analyze->add_option("--grid-size", aa.grid_size, "KDE grid points");
  analyze->add_option("--weighting", aa.weighting, "Layer-mean weighting: per_record | token");
  analyze->add_option("--config", aa.config, "Config file (default: $COTFLOW_CONFIG)");
  analyze->add_flag("--lenient", aa.lenient, "Skip malformed records instead of failing");
  analyze->add_option("-o,--out", aa.out, "Output directory")->required();

  std::vector<std::string> report_dirs, report_sections;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "Aggregate analysis directories");
  rep->add_option("dirs", report_dirs, "Analysis directories")->required();
  rep->add_option("--sections", report_sections, "Sections to include")->delimiter(',');
  rep->add_option("-o,--out", report_out, "Output directory")->required();

  std::string imp_standard, imp_cot, imp_printed;
  auto* imp = app.add_subcommand("improvement", "Relative accuracy improvement of CoT over Standard");
  imp->add_option("--standard", imp_standard, "Standard accuracy in [0, 1]")->required();
  imp->add_option("--cot", imp_cot, "CoT accuracy in [0, 1]")->required();
  imp->add_option("--printed", imp_printed, "Published improvement to audit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_trace);
    if (*synth) return cmd_synth(synth_spec, synth_out);
    if (*analyze) return cmd_analyze(aa);
    if (*rep) return cmd_report(report_dirs, report_sections, report_out);
    if (*imp) return cmd_improvement(imp_standard, imp_cot, imp_printed);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}
