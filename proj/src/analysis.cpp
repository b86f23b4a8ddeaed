// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/analysis.hpp"

#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "cotflow/csv.hpp"
#include "cotflow/digest.hpp"
#include "cotflow/pairing.hpp"
#include "cotflow/stats.hpp"

namespace cotflow::analysis {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::keywords: return "keywords";
    case Kind::structure: return "structure";
    case Kind::projection: return "projection";
    case Kind::activation: return "activation";
  }
  return "?";
}

Kind parse_kind(std::string_view s) {
  for (Kind k : {Kind::keywords, Kind::structure, Kind::projection, Kind::activation}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown analysis '" + std::string(s) + "'");
}

Options Options::from_config(const Config& config) {
  Options o;
  if (auto p = config.path_or_null("lexicon")) o.lexicon = lexicon::TestPointLexicon::load(*p);
  if (auto p = config.path_or_null("entity_spec")) o.specs = structure::EntitySpecs::load(*p);
  const auto& bw = config.get("bandwidth");
  if (bw.is_number()) o.bandwidth = bw.get<double>();
  o.grid_size = config.get("grid_size").get<size_t>();
  o.weighting = config.get("weighting") == "token" ? activation::Weighting::token : activation::Weighting::per_record;
  o.strict = config.get("strict").get<bool>();
  o.config_echo = config.echo();
  return o;
}

ojson manifest_json(const RunManifest& m) {
  ojson j;
  j["model"] = m.model;
  j["dataset"] = m.dataset;
  j["prompt_kind"] = to_string(m.prompt_kind);
  j["prompt_source_dataset"] = m.prompt_source_dataset;
  j["record_count"] = m.record_count;
  j["accuracy"] = m.accuracy ? ojson(*m.accuracy) : ojson(nullptr);
  j["created_at"] = m.created_at;
  return j;
}

ojson describe_input(const fs::path& trace) {
  TraceReader reader(trace, {.strict = false, .load_activations = false, .validate = false});
  ojson j;
  j["path"] = trace.string();
  j["sha256"] = sha256_file(trace);
  if (const auto& sc = reader.sidecar_path()) {
    j["sidecar"] = {{"path", sc->string()}, {"sha256", sha256_file(*sc)}};
  } else {
    j["sidecar"] = nullptr;
  }
  j["manifest"] = manifest_json(reader.manifest());
  return j;
}

void write_output(const Output& out, const fs::path& dir, const std::string& json_name) {
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f << body;
    if (!f) throw DataError("cannot write " + (dir / name).string());
  };
  put(json_name, out.json.dump(2) + "\n");
  for (const auto& [name, body] : out.files) put(name, body);
}

namespace {

ojson opt(std::optional<double> x) { return x ? ojson(*x) : ojson(nullptr); }

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const char l = text::is_upper(c) ? char(c - 'A' + 'a') : c;
    out += text::is_alpha(l) || text::is_digit(l) ? l : '_';
  }
  return out.empty() ? "unnamed" : out;
}

std::string dataset_key(const std::string& name, const Options& o) {
  try {
    return o.specs.for_dataset(name).dataset;
  } catch (const DataError&) {
    return name;
  }
}

// Streams every record, turning strict-mode failures into DataError and
// collecting lenient-mode errors.
template <class F>
RunManifest each_record(const fs::path& path, const Options& o, bool load_activations, Output& out, F&& f) {
  TraceReader reader(path, {.strict = o.strict, .load_activations = load_activations, .validate = true});
  while (auto r = reader.next()) f(*r);
  for (const auto& e : reader.errors()) out.record_errors.push_back(e);
  return reader.manifest();
}

ojson header(Kind kind, const std::vector<fs::path>& traces, const Options& o) {
  ojson j;
  j["tool"] = "cotflow";
  j["analysis"] = to_string(kind);
  j["format_version"] = 1;
  j["inputs"] = ojson::array();
  for (const auto& t : traces) j["inputs"].push_back(describe_input(t));
  j["config"] = o.config_echo;
  return j;
}

ojson errors_json(const Output& out) {
  ojson a = ojson::array();
  for (const auto& e : out.record_errors) a.push_back({{"line", e.line}, {"id", e.id}, {"message", e.message}});
  return a;
}

ojson run_label(const RunManifest& m) {
  return {{"dataset", m.dataset},
          {"prompt_source_dataset", m.prompt_source_dataset},
          {"prompt_kind", to_string(m.prompt_kind)},
          {"model", m.model}};
}

// ---------------------------------------------------------------- keywords

Output keywords(const std::vector<fs::path>& traces, const Options& o) {
  Output out;
  out.json = header(Kind::keywords, traces, o);
  csv::Writer w({"prompt_source_dataset", "target_dataset", "prompt_kind", "model", "records", "category", "origin",
                 "mean", "defined", "undefined"});
  ojson runs = ojson::array();
  std::vector<lexicon::TransferRun> cot_runs;
  for (const auto& path : traces) {
    lexicon::ImitationAggregate agg;
    std::string last_prompt;
    lexicon::CategoryOccurrences prompt_occ;
    bool have_prompt = false;
    const auto m = each_record(path, o, false, out, [&](const TraceRecord& r) {
      if (!have_prompt || r.prompt_text != last_prompt) {
        prompt_occ = lexicon::extract_test_points(r.prompt_text, o.lexicon);
        last_prompt = r.prompt_text;
        have_prompt = true;
      }
      agg.add(lexicon::imitation_proportions(lexicon::extract_test_points(r.generated_text(), o.lexicon), prompt_occ,
                                             lexicon::extract_test_points(r.question_text, o.lexicon)));
    });
    ojson run = run_label(m);
    run["records"] = agg.records();
    ojson cells = ojson::array();
    for (auto c : lexicon::kCategories) {
      for (auto s : lexicon::kSources) {
        const auto& cell = agg.at(c, s);
        cells.push_back({{"category", lexicon::to_string(c)},
                         {"origin", lexicon::to_string(s)},
                         {"mean", opt(cell.mean())},
                         {"defined", cell.defined},
                         {"undefined", cell.undefined}});
        w.row({m.prompt_source_dataset, m.dataset, std::string(to_string(m.prompt_kind)), m.model,
               std::to_string(agg.records()), std::string(lexicon::to_string(c)), std::string(lexicon::to_string(s)),
               csv::number(cell.mean()), std::to_string(cell.defined), std::to_string(cell.undefined)});
      }
    }
    run["cells"] = cells;
    runs.push_back(run);
    if (m.prompt_kind == PromptKind::cot) cot_runs.push_back({m.prompt_source_dataset, m.dataset, agg});
  }
  ojson matrix = ojson::array();
  for (const auto& [key, agg] : lexicon::transfer_matrix(cot_runs)) {
    ojson row = {{"prompt_source_dataset", key.first}, {"target_dataset", key.second}, {"records", agg.records()}};
    ojson cells = ojson::object();
    for (auto c : lexicon::kCategories) {
      for (auto s : lexicon::kSources) {
        const auto& cell = agg.at(c, s);
        cells[std::string(lexicon::to_string(c)) + "/" + std::string(lexicon::to_string(s))] = {
            {"mean", opt(cell.mean())}, {"defined", cell.defined}, {"undefined", cell.undefined}};
      }
    }
    row["cells"] = cells;
    matrix.push_back(row);
  }
  out.json["results"] = {{"denominator", lexicon::kDenominatorBasis}, {"runs", runs}, {"transfer_matrix", matrix}};
  out.json["record_errors"] = errors_json(out);
  out.files.push_back({"imitation.csv", w.str()});
  return out;
}

// ---------------------------------------------------------------- structure

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

Output structure_analysis(const std::vector<fs::path>& traces, const Options& o) {
  Output out;
  out.json = header(Kind::structure, traces, o);
  csv::Writer per_record({"id", "dataset", "prompt_kind", "stage1_entities", "stage2_reasoning", "stage2_evidence",
                          "stage3_final_answer", "adherent", "correct"});
  csv::Writer per_run({"dataset", "prompt_source_dataset", "prompt_kind", "model", "records", "imitation_count",
                       "accuracy"});
  ojson runs = ojson::array();
  std::vector<structure::CorrelationPoint> points;
  for (const auto& path : traces) {
    size_t records = 0, adherent = 0, correct = 0, unparseable = 0, skipped = 0;
    const auto m = each_record(path, o, false, out, [&](const TraceRecord& r) {
      const auto& spec = o.specs.for_dataset(r.dataset);
      structure::AdherenceVerdict v;
      try {
        v = structure::adherence(r, spec);
      } catch (const std::invalid_argument& e) {
        if (o.strict) throw DataError("record " + r.id + ": " + e.what());
        out.record_errors.push_back({0, r.id, e.what()});
        ++skipped;
        return;
      }
      const auto ex = projection::extract_answer(r, spec, o.answer_options);
      ++records;
      adherent += v.adherent;
      correct += ex.correct;
      unparseable += ex.unparseable;
      std::string evidence = v.stage2.verb_count ? "verbs=" + std::to_string(*v.stage2.verb_count)
                                                 : join(v.stage2.new_entities, ";");
      std::vector<std::string> ents;
      for (const auto& e : v.stage1_entities.entities) ents.push_back(e.value);
      per_record.row({r.id, r.dataset, std::string(to_string(r.prompt_kind)), join(ents, ";"),
                      v.stage2.reasoning ? "1" : "0", evidence, v.stage3.found ? "1" : "0", v.adherent ? "1" : "0",
                      ex.correct ? "1" : "0"});
    });
    ojson run = run_label(m);
    const std::optional<double> acc = records ? std::optional<double>(double(correct) / double(records)) : std::nullopt;
    run["records"] = records;
    run["imitation_count"] = adherent;
    run["adherence_rate"] = records ? ojson(double(adherent) / double(records)) : ojson(nullptr);
    run["accuracy"] = opt(acc);
    run["unparseable"] = unparseable;
    run["skipped"] = skipped;
    runs.push_back(run);
    per_run.row({m.dataset, m.prompt_source_dataset, std::string(to_string(m.prompt_kind)), m.model,
                 std::to_string(records), std::to_string(adherent), csv::number(acc)});
    if (acc) points.push_back({double(adherent), *acc});
  }
  ojson corr;
  try {
    const auto c = structure::adherence_accuracy_correlation(points);
    corr = {{"method", "pearson"}, {"r", c.r}, {"slope", c.slope}, {"intercept", c.intercept}, {"n", c.n}};
  } catch (const std::domain_error& e) {
    corr = {{"method", "pearson"}, {"r", nullptr}, {"n", points.size()}, {"error", e.what()}};
  }
  out.json["results"] = {{"runs", runs}, {"correlation", corr}};
  out.json["record_errors"] = errors_json(out);
  out.files.push_back({"adherence.csv", per_record.str()});
  out.files.push_back({"adherence_runs.csv", per_run.str()});
  return out;
}

// ---------------------------------------------------------------- projection

Output projection_analysis(const std::vector<fs::path>& traces, const Options& o) {
  Output out;
  out.json = header(Kind::projection, traces, o);
  csv::Writer ent({"id", "prompt_kind", "correct", "entropy"});
  ojson runs = ojson::array();
  std::set<std::string> names;
  const auto grid = projection::uniform_grid(o.grid_size);
  for (const auto& path : traces) {
    std::vector<double> samples;
    size_t records = 0, phrase_found = 0, correct = 0, unparseable = 0;
    size_t ent_n = 0, no_space = 0, no_topk = 0, not_covered = 0, no_phrase_ent = 0;
    stats::CompensatedSum ent_sum, ent_sum_ok, ent_sum_bad;
    size_t ent_ok = 0, ent_bad = 0;
    const auto m = each_record(path, o, false, out, [&](const TraceRecord& r) {
      ++records;
      const auto& spec = o.specs.for_dataset(r.dataset);
      const auto ex = projection::extract_answer(r, spec, o.answer_options);
      correct += ex.correct;
      unparseable += ex.unparseable;
      try {
        const auto phrase = projection::locate_answer_phrase(r);
        const auto seq = projection::sequence_probabilities(r, phrase.span);
        samples.insert(samples.end(), seq.probs.begin(), seq.probs.end());
        ++phrase_found;
      } catch (const projection::NoAnswerPhrase&) {
      }
      const auto& space = r.answer_space ? *r.answer_space : spec.answer_space;
      if (space.empty()) {
        ++no_space;
        return;
      }
      try {
        const auto d = projection::answer_step_distribution(r, space, o.answer_options);
        const double h = projection::entropy(d);
        ++ent_n;
        ent_sum.add(h);
        (ex.correct ? ent_sum_ok : ent_sum_bad).add(h);
        (ex.correct ? ent_ok : ent_bad)++;
        ent.row({r.id, std::string(to_string(r.prompt_kind)), ex.correct ? "1" : "0", csv::number(h)});
      } catch (const projection::NoAnswerPhrase&) {
        ++no_phrase_ent;
      } catch (const projection::AnswerSpaceNotCovered&) {
        ++not_covered;
      } catch (const DataError&) {
        ++no_topk;
      }
    });
    ojson run = run_label(m);
    run["records"] = records;
    run["answer_phrase_found"] = phrase_found;
    run["no_answer_phrase"] = records - phrase_found;
    const std::optional<double> acc = records ? std::optional<double>(double(correct) / double(records)) : std::nullopt;
    run["accuracy"] = opt(acc);
    run["unparseable"] = unparseable;

    ojson kde;
    kde["samples"] = samples.size();
    std::optional<double> h = o.bandwidth;
    std::string why;
    if (!h) {
      try {
        h = projection::silverman_bandwidth(samples);
        kde["bandwidth_rule"] = "silverman";
      } catch (const std::domain_error& e) {
        why = e.what();
      }
    } else {
      kde["bandwidth_rule"] = "fixed";
    }
    if (h && !samples.empty()) {
      const auto curve = projection::kde_gaussian(samples, *h, grid);
      std::string name = "kde_" + slug(dataset_key(m.dataset, o)) + "_" + std::string(to_string(m.prompt_kind));
      if (m.prompt_source_dataset != m.dataset) name += "_from_" + slug(m.prompt_source_dataset);
      std::string unique = name;
      for (int k = 2; names.count(unique); ++k) unique = name + "_" + std::to_string(k);
      names.insert(unique);
      csv::Writer kw({"grid", "density"});
      for (size_t i = 0; i < curve.grid.size(); ++i) kw.row({csv::number(curve.grid[i]), csv::number(curve.density[i])});
      out.files.push_back({unique + ".csv", kw.str()});
      kde["bandwidth"] = *h;
      kde["grid_size"] = curve.grid.size();
      kde["mass"] = projection::trapezoid_mass(curve);
      kde["file"] = unique + ".csv";
    } else {
      kde["bandwidth"] = nullptr;
      kde["error"] = why.empty() ? "no samples" : why;
    }
    run["kde"] = kde;
    run["entropy"] = {{"unit", "nats"},
                      {"records", ent_n},
                      {"mean", ent_n ? ojson(ent_sum.value() / double(ent_n)) : ojson(nullptr)},
                      {"mean_correct", ent_ok ? ojson(ent_sum_ok.value() / double(ent_ok)) : ojson(nullptr)},
                      {"mean_incorrect", ent_bad ? ojson(ent_sum_bad.value() / double(ent_bad)) : ojson(nullptr)},
                      {"excluded",
                       {{"no_answer_space", no_space},
                        {"no_answer_phrase", no_phrase_ent},
                        {"no_topk_at_answer_step", no_topk},
                        {"answer_space_not_covered", not_covered}}}};
    runs.push_back(run);
  }
  out.json["results"] = {{"runs", runs}};
  out.json["record_errors"] = errors_json(out);
  out.files.push_back({"entropy.csv", ent.str()});
  return out;
}

// ---------------------------------------------------------------- activation

void summary_rows(csv::Writer& sw, csv::Writer& hw, const RunManifest& m, const char* cohort,
                  const activation::ActivationSummary& s) {
  sw.row({m.dataset, m.model, cohort, std::to_string(s.records), csv::number(s.mean), csv::number(s.p5),
          csv::number(s.p25), csv::number(s.p50), csv::number(s.p75), csv::number(s.p95)});
  for (size_t b = 0; b < s.bin_counts.size(); ++b) {
    hw.row({m.dataset, m.model, cohort, std::to_string(b), csv::number(s.bin_edges[b]), csv::number(s.bin_edges[b + 1]),
            std::to_string(s.bin_counts[b])});
  }
}

ojson summary_json(const activation::ActivationSummary& s) {
  return {{"records", s.records}, {"mean", s.mean},  {"p5", s.p5},   {"p25", s.p25},
          {"p50", s.p50},         {"p75", s.p75},    {"p95", s.p95}, {"step_totals", s.step_totals},
          {"bin_edges", s.bin_edges}, {"bin_counts", s.bin_counts}};
}

Output activation_analysis(const std::vector<fs::path>& traces, const Options& o) {
  if (traces.size() != 2) throw std::invalid_argument("activation analysis takes a CoT trace and a Standard trace");
  Output out;
  out.json = header(Kind::activation, traces, o);

  // pass 1: ids only
  std::vector<std::string> ids[2];
  std::unordered_map<std::string, std::string> cot_dataset;
  RunManifest manifests[2];
  for (int side = 0; side < 2; ++side) {
    manifests[side] = each_record(traces[size_t(side)], o, false, out, [&](const TraceRecord& r) {
      if (side == 0) {
        cot_dataset.emplace(r.id, r.dataset);
      } else if (auto it = cot_dataset.find(r.id); it != cot_dataset.end() && it->second != r.dataset) {
        throw DataError("record " + r.id + " pairs datasets " + it->second + " and " + r.dataset);
      }
      ids[side].push_back(r.id);
    });
  }
  if (manifests[0].prompt_kind != PromptKind::cot) throw DataError(traces[0].string() + " is not a CoT trace");
  if (manifests[1].prompt_kind != PromptKind::standard) throw DataError(traces[1].string() + " is not a Standard trace");
  const auto pairing = pair_ids(ids[0], ids[1]);
  ids[0].clear();
  ids[0].shrink_to_fit();
  ids[1].clear();
  ids[1].shrink_to_fit();
  cot_dataset.clear();
  out.record_errors.clear();  // pass 2 reports the same errors again

  // pass 2: stream the paired records' profiles
  activation::LayerMeanAccumulator layers[2] = {activation::LayerMeanAccumulator(o.weighting),
                                                activation::LayerMeanAccumulator(o.weighting)};
  activation::DistributionAccumulator dist[2];
  for (int side = 0; side < 2; ++side) {
    each_record(traces[size_t(side)], o, true, out, [&](const TraceRecord& r) {
      if (!pairing.paired.count(r.id)) return;
      if (!r.activations) throw DataError("record " + r.id + " has no activation profile");
      layers[side].add(*r.activations);
      dist[side].add(*r.activations);
    });
  }
  if (layers[0].records() == 0) throw DataError("no paired records with activation profiles");
  const auto diff = activation::layer_diff(layers[0], layers[1]);

  csv::Writer lw({"layer", "cot_mean", "standard_mean", "diff"});
  for (size_t l = 0; l < diff.diff.size(); ++l) {
    lw.row({std::to_string(l), csv::number(diff.cot[l]), csv::number(diff.standard[l]), csv::number(diff.diff[l])});
  }
  const auto cot_summary = dist[0].summary();
  const auto std_summary = dist[1].summary();
  csv::Writer sw({"dataset", "model", "cohort", "records", "mean", "p5", "p25", "p50", "p75", "p95"});
  csv::Writer hw({"dataset", "model", "cohort", "bin", "low", "high", "count"});
  summary_rows(sw, hw, manifests[0], "cot", cot_summary);
  summary_rows(sw, hw, manifests[1], "standard", std_summary);

  ojson unpaired = ojson::array();
  for (size_t i = 0; i < pairing.unpaired.size() && i < 100; ++i) {
    unpaired.push_back({{"id", pairing.unpaired[i].id}, {"side", to_string(pairing.unpaired[i].side)}});
  }
  out.json["results"] = {
      {"run", run_label(manifests[0])},
      {"weighting", o.weighting == activation::Weighting::token ? "token" : "per_record"},
      {"paired", pairing.paired.size()},
      {"unpaired_count", pairing.unpaired.size()},
      {"unpaired", unpaired},
      {"num_layers", diff.diff.size()},
      {"cot_layer_means", diff.cot},
      {"standard_layer_means", diff.standard},
      {"diff", diff.diff},
      {"final_third_layers", diff.final_third_layers},
      {"final_third_mean", diff.final_third_mean},
      {"summaries", {{"cot", summary_json(cot_summary)}, {"standard", summary_json(std_summary)}}}};
  out.json["record_errors"] = errors_json(out);
  out.files.push_back({"layerdiff.csv", lw.str()});
  out.files.push_back({"activation_summary.csv", sw.str()});
  out.files.push_back({"activation_hist.csv", hw.str()});
  return out;
}

}  // namespace

Output analyze(Kind kind, const std::vector<fs::path>& traces, const Options& options) {
  if (traces.empty()) throw std::invalid_argument("no input traces");
  switch (kind) {
    case Kind::keywords: return keywords(traces, options);
    case Kind::structure: return structure_analysis(traces, options);
    case Kind::projection: return projection_analysis(traces, options);
    case Kind::activation: return activation_analysis(traces, options);
  }
  throw std::invalid_argument("unknown analysis");
}

}  // namespace cotflow::analysis
