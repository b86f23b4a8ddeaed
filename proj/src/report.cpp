// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cotflow/csv.hpp"
#include "cotflow/structure.hpp"

namespace cotflow::report {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& section_names() {
  static const std::vector<std::string> names{"keywords", "structure", "projection", "activation", "improvement"};
  return names;
}

namespace {

struct Analysis {
  fs::path dir;
  ojson json;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Concatenates CSV files that must share one header.
class CsvMerge {
 public:
  explicit CsvMerge(std::vector<std::string> header) : header_(std::move(header)), out_(header_) {}

  void add(const fs::path& file) {
    const auto rows = csv::parse(slurp(file));
    if (rows.empty() || rows.front() != header_) throw DataError(file.string() + ": unexpected CSV header");
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != header_.size()) throw DataError(file.string() + ": ragged CSV row " + std::to_string(i));
      out_.row(rows[i]);
    }
    ++files_;
  }
  const std::string& str() const { return out_.str(); }
  size_t files() const { return files_; }

 private:
  std::vector<std::string> header_;
  csv::Writer out_;
  size_t files_ = 0;
};

const std::vector<std::string> kImitationHeader{"prompt_source_dataset", "target_dataset", "prompt_kind", "model",
                                                "records", "category", "origin", "mean", "defined", "undefined"};
const std::vector<std::string> kAdherenceHeader{"id", "dataset", "prompt_kind", "stage1_entities", "stage2_reasoning",
                                                "stage2_evidence", "stage3_final_answer", "adherent", "correct"};
const std::vector<std::string> kRunsHeader{"dataset", "prompt_source_dataset", "prompt_kind", "model", "records",
                                           "imitation_count", "accuracy"};
const std::vector<std::string> kEntropyHeader{"id", "prompt_kind", "correct", "entropy"};
const std::vector<std::string> kKdeHeader{"grid", "density"};
const std::vector<std::string> kLayerHeader{"layer", "cot_mean", "standard_mean", "diff"};
const std::vector<std::string> kSummaryHeader{"dataset", "model", "cohort", "records", "mean",
                                              "p5",      "p25",   "p50",    "p75",     "p95"};
const std::vector<std::string> kHistHeader{"dataset", "model", "cohort", "bin", "low", "high", "count"};

ojson digests(const std::vector<const Analysis*>& from) {
  ojson a = ojson::array();
  for (const auto* an : from) {
    for (const auto& in : an->json.at("inputs")) {
      ojson d = {{"path", in.at("path")}, {"sha256", in.at("sha256")}};
      if (!in.at("sidecar").is_null()) d["sidecar_sha256"] = in.at("sidecar").at("sha256");
      a.push_back(d);
    }
  }
  return a;
}

ojson dirs_json(const std::vector<const Analysis*>& from) {
  ojson a = ojson::array();
  for (const auto* an : from) a.push_back(an->dir.string());
  return a;
}

// Runs carrying an accuracy, from structure analyses, else projection ones.
std::vector<ojson> accuracy_runs(const std::map<std::string, std::vector<const Analysis*>>& by_kind,
                                 std::vector<const Analysis*>& used) {
  std::vector<ojson> runs;
  for (const char* kind : {"structure", "projection"}) {
    auto it = by_kind.find(kind);
    if (it == by_kind.end()) continue;
    for (const auto* an : it->second) {
      for (const auto& r : an->json.at("results").at("runs")) runs.push_back(r);
      used.push_back(an);
    }
    break;
  }
  return runs;
}

std::string render_percent(const Improvement& imp) {
  std::string s = imp.render();
  if (!s.empty() && s.back() == '%') s.pop_back();
  return s;
}

}  // namespace

analysis::Output build_report(const std::vector<fs::path>& dirs, const std::vector<std::string>& sections) {
  if (dirs.empty()) throw std::invalid_argument("no analysis directories");
  for (const auto& s : sections) {
    if (std::find(section_names().begin(), section_names().end(), s) == section_names().end()) {
      throw std::invalid_argument("unknown report section '" + s + "'");
    }
  }

  std::vector<Analysis> analyses;
  for (const auto& d : dirs) {
    const auto p = d / "analysis.json";
    if (!fs::exists(p)) throw DataError(d.string() + ": no analysis.json");
    ojson j;
    try {
      j = ojson::parse(slurp(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(p.string() + ": " + e.what());
    }
    if (!j.contains("analysis") || !j.contains("inputs") || !j.contains("results")) {
      throw DataError(p.string() + ": not an analysis document");
    }
    analyses.push_back({d, std::move(j)});
  }
  std::map<std::string, std::vector<const Analysis*>> by_kind;
  for (const auto& a : analyses) by_kind[a.json.at("analysis").get<std::string>()].push_back(&a);

  std::vector<std::string> chosen = sections;
  if (chosen.empty()) {
    for (const auto& s : section_names()) {
      const bool have = s == "improvement" ? (by_kind.count("structure") || by_kind.count("projection"))
                                           : by_kind.count(s) > 0;
      if (have) chosen.push_back(s);
    }
  }
  // keep a fixed section order
  std::vector<std::string> ordered;
  for (const auto& s : section_names()) {
    if (std::find(chosen.begin(), chosen.end(), s) != chosen.end()) ordered.push_back(s);
  }

  analysis::Output out;
  ojson summary;
  summary["tool"] = "cotflow";
  summary["format_version"] = 1;

  // manifest echo, one entry per distinct input trace
  ojson manifests = ojson::array();
  std::set<std::string> seen;
  for (const auto& a : analyses) {
    for (const auto& in : a.json.at("inputs")) {
      if (seen.insert(in.at("sha256").get<std::string>()).second) {
        manifests.push_back({{"path", in.at("path")}, {"sha256", in.at("sha256")}, {"manifest", in.at("manifest")}});
      }
    }
  }
  summary["manifests"] = manifests;
  ojson sec = ojson::object();

  for (const auto& name : ordered) {
    if (name == "improvement") {
      std::vector<const Analysis*> used;
      const auto runs = accuracy_runs(by_kind, used);
      if (used.empty()) throw DataError("section 'improvement' needs a structure or projection analysis");
      // (model, dataset) -> accuracies of same-dataset runs
      std::map<std::pair<std::string, std::string>, std::pair<std::optional<double>, std::optional<double>>> table;
      for (const auto& r : runs) {
        if (r.at("prompt_source_dataset") != r.at("dataset") || r.at("accuracy").is_null()) continue;
        auto& cell = table[{r.at("model").get<std::string>(), r.at("dataset").get<std::string>()}];
        (r.at("prompt_kind") == "cot" ? cell.second : cell.first) = r.at("accuracy").get<double>();
      }
      csv::Writer w({"dataset", "model", "standard_accuracy", "cot_accuracy", "relative_improvement"});
      ojson rows = ojson::array();
      for (const auto& [key, acc] : table) {
        if (!acc.first || !acc.second) continue;
        std::string rendered;
        try {
          rendered = render_percent(relative_improvement(*acc.first, *acc.second));
        } catch (const std::domain_error&) {
        }
        w.row({key.second, key.first, csv::number(*acc.first), csv::number(*acc.second), rendered});
        rows.push_back({{"dataset", key.second},
                        {"model", key.first},
                        {"standard_accuracy", *acc.first},
                        {"cot_accuracy", *acc.second},
                        {"relative_improvement", rendered.empty() ? ojson(nullptr) : ojson(rendered)}});
      }
      out.files.push_back({"improvement.csv", w.str()});
      sec[name] = {{"analysis_dirs", dirs_json(used)}, {"inputs", digests(used)}, {"rows", rows}};
      continue;
    }

    auto it = by_kind.find(name);
    if (it == by_kind.end()) throw DataError("section '" + name + "' requested but no " + name + " analysis was given");
    const auto& from = it->second;
    ojson s = {{"analysis_dirs", dirs_json(from)}, {"inputs", digests(from)}};

    if (name == "keywords") {
      CsvMerge m(kImitationHeader);
      ojson runs = ojson::array();
      // merge transfer rows by key, weighting means by their defined counts
      std::map<std::pair<std::string, std::string>, ojson> matrix;
      for (const auto* a : from) {
        m.add(a->dir / "imitation.csv");
        for (const auto& r : a->json.at("results").at("runs")) runs.push_back(r);
        for (const auto& row : a->json.at("results").at("transfer_matrix")) {
          const std::pair<std::string, std::string> key{row.at("prompt_source_dataset"), row.at("target_dataset")};
          auto [pos, fresh] = matrix.try_emplace(key, row);
          if (fresh) continue;
          ojson& dst = pos->second;
          dst["records"] = dst.at("records").get<size_t>() + row.at("records").get<size_t>();
          for (const auto& [cell, v] : row.at("cells").items()) {
            ojson& d = dst["cells"][cell];
            const size_t nd = d.at("defined").get<size_t>(), nv = v.at("defined").get<size_t>();
            const double sum = (nd ? d.at("mean").get<double>() * double(nd) : 0.0) +
                               (nv ? v.at("mean").get<double>() * double(nv) : 0.0);
            d["defined"] = nd + nv;
            d["undefined"] = d.at("undefined").get<size_t>() + v.at("undefined").get<size_t>();
            d["mean"] = nd + nv ? ojson(sum / double(nd + nv)) : ojson(nullptr);
          }
        }
      }
      ojson mat = ojson::array();
      for (auto& [k, row] : matrix) mat.push_back(row);
      s["denominator"] = lexicon::kDenominatorBasis;
      s["runs"] = runs;
      s["transfer_matrix"] = mat;
      out.files.push_back({"imitation.csv", m.str()});
    } else if (name == "structure") {
      CsvMerge per_record(kAdherenceHeader), per_run(kRunsHeader);
      ojson runs = ojson::array();
      std::vector<structure::CorrelationPoint> points;
      for (const auto* a : from) {
        per_record.add(a->dir / "adherence.csv");
        per_run.add(a->dir / "adherence_runs.csv");
        for (const auto& r : a->json.at("results").at("runs")) {
          runs.push_back(r);
          if (!r.at("accuracy").is_null()) {
            points.push_back({r.at("imitation_count").get<double>(), r.at("accuracy").get<double>()});
          }
        }
      }
      ojson corr;
      try {
        const auto c = structure::adherence_accuracy_correlation(points);
        corr = {{"method", "pearson"}, {"r", c.r}, {"slope", c.slope}, {"intercept", c.intercept}, {"n", c.n}};
      } catch (const std::domain_error& e) {
        corr = {{"method", "pearson"}, {"r", nullptr}, {"n", points.size()}, {"error", e.what()}};
      }
      s["runs"] = runs;
      s["correlation"] = corr;
      out.files.push_back({"adherence.csv", per_record.str()});
      out.files.push_back({"adherence_runs.csv", per_run.str()});
    } else if (name == "projection") {
      CsvMerge ent(kEntropyHeader);
      ojson runs = ojson::array();
      std::set<std::string> names;
      for (const auto* a : from) {
        ent.add(a->dir / "entropy.csv");
        for (auto r : a->json.at("results").at("runs")) {
          auto& kde = r["kde"];
          if (kde.contains("file")) {
            const std::string file = kde.at("file");
            CsvMerge one(kKdeHeader);
            one.add(a->dir / file);
            std::string stem = file.substr(0, file.size() - 4), unique = stem;
            for (int k = 2; names.count(unique); ++k) unique = stem + "_" + std::to_string(k);
            names.insert(unique);
            kde["file"] = unique + ".csv";
            out.files.push_back({unique + ".csv", one.str()});
          }
          runs.push_back(r);
        }
      }
      s["runs"] = runs;
      out.files.push_back({"entropy.csv", ent.str()});
    } else if (name == "activation") {
      CsvMerge sum(kSummaryHeader), hist(kHistHeader);
      ojson results = ojson::array();
      for (size_t i = 0; i < from.size(); ++i) {
        const auto* a = from[i];
        CsvMerge layers(kLayerHeader);
        layers.add(a->dir / "layerdiff.csv");
        const std::string file = from.size() == 1 ? "layerdiff.csv" : "layerdiff_" + std::to_string(i + 1) + ".csv";
        out.files.push_back({file, layers.str()});
        sum.add(a->dir / "activation_summary.csv");
        hist.add(a->dir / "activation_hist.csv");
        ojson r = a->json.at("results");
        r["layerdiff_file"] = file;
        results.push_back(r);
      }
      s["analyses"] = results;
      out.files.push_back({"activation_summary.csv", sum.str()});
      out.files.push_back({"activation_hist.csv", hist.str()});
    }
    sec[name] = s;
  }
  summary["sections"] = sec;
  out.json = std::move(summary);
  return out;
}

}  // namespace cotflow::report
