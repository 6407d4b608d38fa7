// Copyright 2026 The Habitat Forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The habitat-forge command line.
//
//   habitat-forge [--quiet] <subcommand> [options]
//
// Every subcommand accepts --config <file.json>, a JSON object whose keys are
// long option names (without dashes); options given on the command line win.
// Outputs are stamped with the tool version and a config hash computed over
// parameter values and the *contents* of input files, so the hash does not
// depend on where inputs or outputs live. Failures print one JSON error
// record on stderr and exit nonzero.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "habitat/augment/augment.hpp"
#include "habitat/cli/report.hpp"
#include "habitat/composite/composite.hpp"
#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/core/version.hpp"
#include "habitat/corpus/descriptors.hpp"
#include "habitat/corpus/manifest.hpp"
#include "habitat/flybird/flybird.hpp"
#include "habitat/perturb/perturb.hpp"
#include "habitat/prompt/prompt.hpp"
#include "habitat/textcluster/habitat_groups.hpp"
#include "habitat/zseval/embedding.hpp"
#include "habitat/zseval/zseval.hpp"

namespace habitat::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline constexpr int kExitError = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

namespace detail {

// Option groups double as config-hash roles.
inline const std::string kInputs = "Inputs";
inline const std::string kOutputs = "Outputs";
inline const std::string kParams = "Parameters";
inline const std::string kCells = "Report cells";
inline const std::string kRuntime = "Runtime";

inline std::size_t default_jobs() {
  if (const char* env = std::getenv("HABITAT_FORGE_JOBS")) {
    if (auto v = parse_int<std::size_t>(env); v && *v > 0) return *v;
  }
  return 1;
}

inline std::string content_tag(const std::string& path) {
  if (path.empty()) return "";
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return "missing";
  return to_hex(fnv1a64(read_file_bytes(path)));
}

inline std::vector<std::string> effective(const CLI::Option* o) {
  if (o->count() > 0) return o->results();
  const std::string d = o->get_default_str();
  return d.empty() ? std::vector<std::string>{} : std::vector<std::string>{d};
}

/// Order of options is declaration order, so the hash is stable.
inline std::string config_hash(const CLI::App& sub) {
  Fnv1a64 h;
  h.update(sub.get_name()).update("\n");
  for (const CLI::Option* o : sub.get_options()) {
    const std::string& g = o->get_group();
    if (g == kOutputs || g == kRuntime || o->get_name().empty() || o->get_name() == "--help") continue;
    h.update(o->get_name()).update("=");
    for (const auto& v : effective(o)) {
      if (g == kInputs) {
        h.update(content_tag(v));
      } else if (g == kCells) {
        const auto a = v.find(',');
        const auto b = a == std::string::npos ? a : v.find(',', a + 1);
        h.update(b == std::string::npos ? v : v.substr(0, b + 1) + content_tag(v.substr(b + 1)));
      } else {
        h.update(v);
      }
      h.update("\x1f");
    }
    h.update("\n");
  }
  return to_hex(h.digest());
}

inline bool has_flag(const std::vector<std::string>& args, std::size_t from, const std::string& name) {
  for (std::size_t i = from; i < args.size(); ++i)
    if (args[i] == name || args[i].rfind(name + "=", 0) == 0) return true;
  return false;
}

/// Turns a JSON object of option values into command-line tokens for `sub`,
/// skipping options already present in `given` (from index `from`).
inline std::vector<std::string> config_tokens(const CLI::App& sub, const nlohmann::json& cfg,
                                              const std::vector<std::string>& given, std::size_t from,
                                              const std::string& source) {
  if (!cfg.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object", source);
  std::vector<std::string> out;
  auto scalar = [&](const nlohmann::json& v, const std::string& key) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
    throw Error(ErrorCode::InvalidConfig, "unsupported value for '" + key + "'", source);
  };
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string name = "--" + it.key();
    if (name == "--config") continue;
    const CLI::Option* o = sub.get_option_no_throw(name);
    if (!o) throw Error(ErrorCode::InvalidConfig, "unknown option '" + it.key() + "' for " + sub.get_name(), source);
    if (has_flag(given, from, name)) continue;
    const auto& v = it.value();
    if (v.is_null()) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(name);
      continue;
    }
    if (v.is_array()) {
      if (v.empty()) continue;
      out.push_back(name);
      for (const auto& x : v) out.push_back(scalar(x, it.key()));
      continue;
    }
    out.push_back(name);
    out.push_back(scalar(v, it.key()));
  }
  return out;
}

inline nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what(), path);
  }
}

inline std::string insert_after_first_line(const std::string& text, const std::string& lines) {
  const auto nl = text.find('\n');
  return nl == std::string::npos ? text + "\n" + lines : text.substr(0, nl + 1) + lines + text.substr(nl + 1);
}

}  // namespace detail

/// Shared state of one subcommand invocation.
struct Session {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;
  std::string stage;
  std::string config_hash;
  std::size_t jobs = 1;

  void log(const std::string& msg) const {
    if (quiet) return;
    ojson j;
    j["level"] = "info";
    j["stage"] = stage;
    j["msg"] = msg;
    err << j.dump() << "\n";
  }

  void stamp(corpus::DatasetManifest& m) const {
    m.set_meta("tool.version", kToolVersion);
    m.set_meta("config.hash", config_hash);
  }

  /// run.json in an output directory: tool version, command, config hash.
  void write_run_record(const fs::path& dir, ojson extra = ojson::object()) const {
    ojson j;
    j["tool_version"] = kToolVersion;
    j["command"] = stage;
    j["config_hash"] = config_hash;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_file_bytes(dir / "run.json", j.dump(2) + "\n");
  }
};

inline void emit_error(std::ostream& err, const std::string& stage, const std::string& code, const std::string& instance,
                       std::size_t line, const std::string& cause) {
  ojson e;
  e["stage"] = stage;
  e["code"] = code;
  e["instance"] = instance;
  if (line) e["line"] = line;
  e["cause"] = cause;
  ojson j;
  j["error"] = std::move(e);
  err << j.dump() << "\n";
}

inline corpus::DescriptorKind require_kind(const std::string& s) {
  const auto k = corpus::parse_kind(s);
  if (!k) throw Error(ErrorCode::InvalidArgument, "unknown descriptor kind '" + s + "'", s);
  return *k;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

namespace detail {

struct Options {
  // shared
  std::string config;
  std::size_t jobs = default_jobs();
  std::uint64_t seed = 0;
  std::string manifest, out;

  // ingest / prompts
  std::string visual, visual_kind = "mv", habitat;
  bool no_media_check = false;
  std::string direction = "none", missing_habitat = "error";
  bool baseline = false, baseline_only = false;

  // cluster
  std::size_t k_min = 2, k_max = 0;

  // augment
  std::string strategy, groups, plan_in;
  std::size_t copies = 1;
  int canvas_width = 256, canvas_height = 256, inpaint_iters = 64;
  bool plan_only = false;

  // perturb
  std::vector<std::string> kinds{"all"};
  int box_count = 8;
  double box_frac = 0.15;
  bool skip_missing = false, bbox_as_mask = false;

  // flybird
  std::string rule, legend;
  std::optional<double> sky_min_frac, ground_max_frac;

  // eval
  std::string images, labels, report_path, label, support, support_labels;
  std::vector<std::string> ensemble;
  std::size_t shots = 0;

  // compare
  std::string a, b;
  std::size_t top = 20;

  // report
  std::vector<std::string> cells;
  std::string layout, json_out;
};

inline CLI::App* add_common(CLI::App& app, const std::string& name, const std::string& desc, Options& o) {
  CLI::App* s = app.add_subcommand(name, desc);
  s->add_option("--config", o.config, "JSON file of option values")->group(kRuntime);
  s->add_option("--jobs", o.jobs, "worker threads (env HABITAT_FORGE_JOBS)")->group(kRuntime)->check(CLI::PositiveNumber);
  return s;
}

// --- handlers --------------------------------------------------------------

inline void do_ingest(const Options& o, const Session& s) {
  corpus::DatasetManifest m = corpus::load_manifest(o.manifest);
  ojson j;
  j["dataset"] = m.dataset_name;
  j["split"] = std::string(corpus::to_string(m.split));
  j["classes"] = m.classes.size();
  j["instances"] = m.instances.size();
  std::size_t masks = 0, boxes = 0, pan = 0, hab = 0;
  for (const auto& i : m.instances) {
    masks += i.mask.has_value();
    boxes += i.bbox.has_value();
    pan += i.panoptic.has_value();
    hab += i.habitat.has_value();
  }
  j["with_mask"] = masks;
  j["with_bbox"] = boxes;
  j["with_panoptic"] = pan;
  j["with_habitat"] = hab;
  if (!o.no_media_check) {
    const auto r = corpus::validate_media(m);
    j["images_checked"] = r.images_checked;
    j["masks_checked"] = r.masks_checked;
  }
  auto describe = [&](const std::string& path, corpus::DescriptorKind kind) {
    const auto set = corpus::load_descriptors(path, kind, &m);
    ojson d;
    d["kind"] = std::string(corpus::to_string(kind));
    d["classes"] = set.entries.size();
    d["descriptors"] = set.descriptor_count();
    d["uncovered"] = corpus::uncovered_classes(m, set);
    return d;
  };
  if (!o.visual.empty()) j["visual"] = describe(o.visual, require_kind(o.visual_kind));
  if (!o.habitat.empty()) j["habitat"] = describe(o.habitat, corpus::DescriptorKind::HABITAT);
  const fs::path dir = o.out;
  s.stamp(m);
  corpus::write_manifest(m, dir / "manifest.tsv");
  j["tool_version"] = kToolVersion;
  j["config_hash"] = s.config_hash;
  write_file_bytes(dir / "ingest.json", j.dump(2) + "\n");
  s.log("ingested " + std::to_string(m.instances.size()) + " instances, " + std::to_string(m.classes.size()) + " classes");
}

inline void do_cluster(const Options& o, const Session& s) {
  std::optional<corpus::DatasetManifest> m;
  if (!o.manifest.empty()) m = corpus::load_manifest(o.manifest);
  const auto set = corpus::load_descriptors(o.habitat, corpus::DescriptorKind::HABITAT, m ? &*m : nullptr);
  textcluster::GroupingOptions g;
  g.k_min = o.k_min;
  g.k_max = o.k_max;
  g.jobs = 1;  // clustering stays sequential
  auto groups = textcluster::build_habitat_groups(set, o.seed, g);
  groups.meta.emplace_back("tool.version", kToolVersion);
  groups.meta.emplace_back("config.hash", s.config_hash);
  textcluster::write_groups(groups, o.out);
  s.log("chosen_k=" + std::to_string(groups.chosen_k) + " silhouette=" + format_double(groups.silhouette_by_k.at(groups.chosen_k)));
}

inline std::string stamp_lines(const Session& s) {
  return std::string("#tool_version ") + kToolVersion + "\n#config_hash " + s.config_hash + "\n";
}

inline void do_augment(const Options& o, const Session& s) {
  const auto m = corpus::load_manifest(o.manifest);
  std::optional<textcluster::HabitatGroups> groups;
  if (!o.groups.empty()) groups = textcluster::load_groups(o.groups);
  augment::AugmentationPlan p;
  if (!o.plan_in.empty()) {
    p = augment::parse_plan(read_file_bytes(o.plan_in), o.plan_in);
    const auto bad = augment::plan_violations(p, m, groups ? &*groups : nullptr);
    if (!bad.empty()) throw Error(ErrorCode::InvalidArgument, "plan breaks its strategy: " + bad.front(), o.plan_in);
  } else {
    const auto strategy = augment::parse_strategy(o.strategy);
    if (!strategy) throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + o.strategy + "'", o.strategy);
    augment::PlanOptions po;
    po.copies_per_image = o.copies;
    p = augment::plan(m, *strategy, groups ? &*groups : nullptr, o.seed, po);
  }
  const fs::path dir = o.out;
  if (!o.plan_only) {
    augment::ExecuteOptions eo;
    eo.canvas_width = o.canvas_width;
    eo.canvas_height = o.canvas_height;
    eo.inpainter = composite::fallback_inpainter({o.inpaint_iters});
    eo.jobs = s.jobs;
    auto outm = augment::execute(p, m, dir, eo);
    s.stamp(outm);
    corpus::write_manifest(outm, dir / "manifest.tsv");
  }
  write_file_bytes(dir / "plan.txt", insert_after_first_line(augment::serialize_plan(p), stamp_lines(s)));
  ojson extra;
  extra["strategy"] = std::string(augment::to_string(p.strategy));
  extra["pairings"] = p.pairings.size();
  s.write_run_record(dir, extra);
  s.log(std::to_string(p.pairings.size()) + " pairings (" + std::string(augment::to_string(p.strategy)) + ")");
}

inline void do_perturb(const Options& o, const Session& s) {
  const auto m = corpus::load_manifest(o.manifest);
  std::vector<perturb::PerturbationKind> kinds;
  for (const auto& k : o.kinds) {
    if (k == "all") {
      kinds.assign(std::begin(perturb::kAllKinds), std::end(perturb::kAllKinds));
      continue;
    }
    const auto pk = perturb::parse_kind(k);
    if (!pk) throw Error(ErrorCode::InvalidArgument, "unknown perturbation '" + k + "'", k);
    if (std::find(kinds.begin(), kinds.end(), *pk) == kinds.end()) kinds.push_back(*pk);
  }
  perturb::SuiteOptions so;
  so.seed = o.seed;
  so.boxes = {o.box_count, o.box_frac};
  so.skip_missing = o.skip_missing;
  so.bbox_as_mask = o.bbox_as_mask;
  so.inpainter = composite::fallback_inpainter({o.inpaint_iters});
  so.jobs = s.jobs;
  const fs::path dir = fs::absolute(o.out).lexically_normal();
  auto result = perturb::build_suite(m, kinds, dir, so);
  for (auto& [kind, km] : result.manifests) {
    s.stamp(km);
    corpus::write_manifest(km, dir / std::string(perturb::to_string(kind)) / "manifest.tsv");
  }
  ojson extra;
  extra["skipped"] = result.skipped.size();
  s.write_run_record(dir, extra);
  s.log(std::to_string(kinds.size()) + " variants, " + std::to_string(result.skipped.size()) + " skipped");
}

inline void do_flybird(const Options& o, const Session& s) {
  const auto m = corpus::load_manifest(o.manifest);
  flybird::RuleSpec spec = o.rule.empty() ? flybird::RuleSpec{} : flybird::load_rule(o.rule);
  if (!o.legend.empty()) spec.shared_legend = fs::absolute(o.legend);
  if (o.sky_min_frac) spec.sky_min_frac = *o.sky_min_frac;
  if (o.ground_max_frac) spec.ground_max_frac = *o.ground_max_frac;
  auto r = flybird::partition(m, spec, s.jobs);
  s.stamp(r.fly);
  s.stamp(r.nonfly);
  flybird::write_partition(r, m, o.out);
  s.write_run_record(o.out);
  s.log(std::to_string(r.stats.fly) + "/" + std::to_string(r.stats.total) + " FlyBird");
}

inline void do_prompts(const Options& o, const Session& s) {
  const auto m = corpus::load_manifest(o.manifest);
  std::optional<corpus::NameDirection> dir;
  if (o.direction != "none") {
    dir = corpus::parse_direction(o.direction);
    if (!dir) throw Error(ErrorCode::InvalidArgument, "unknown direction '" + o.direction + "'", o.direction);
  }
  const auto policy = prompt::parse_policy(o.missing_habitat);
  if (!policy) throw Error(ErrorCode::InvalidArgument, "unknown missing-habitat policy '" + o.missing_habitat + "'");

  std::vector<std::string> classes;
  for (const auto& c : m.classes) {
    if (dir == corpus::NameDirection::CommonToScientific) {
      if (!c.scientific_name) throw Error(ErrorCode::MissingScientificName, "class has no scientific name", c.common_name);
      classes.push_back(*c.scientific_name);
    } else {
      classes.push_back(c.common_name);
    }
  }
  std::vector<prompt::PromptEnsemble> ens;
  if (o.baseline_only) {
    ens = prompt::baseline_ensembles(classes);
  } else {
    if (o.visual.empty()) throw Error(ErrorCode::InvalidArgument, "--visual is required unless --baseline-only is set");
    auto visual = corpus::load_descriptors(o.visual, require_kind(o.visual_kind), &m);
    std::optional<corpus::DescriptorSet> hab;
    if (!o.habitat.empty()) hab = corpus::load_descriptors(o.habitat, corpus::DescriptorKind::HABITAT, &m);
    if (dir) {
      visual = prompt::swap_descriptor_names(visual, m, *dir);
      if (hab) hab = prompt::swap_descriptor_names(*hab, m, *dir);
    }
    prompt::EnsembleOptions eo;
    eo.missing_habitat = *policy;
    eo.include_baseline = o.baseline;
    ens = prompt::build_ensembles(classes, visual, hab ? &*hab : nullptr, eo);
  }
  const std::string stamp = std::string("#meta tool_version ") + kToolVersion + "\n#meta config_hash " + s.config_hash + "\n";
  write_file_bytes(o.out, insert_after_first_line(prompt::serialize_prompts(ens), stamp));
  std::size_t n = 0;
  for (const auto& e : ens) n += e.prompts.size();
  s.log(std::to_string(n) + " prompts for " + std::to_string(ens.size()) + " classes");
}

inline void do_eval(const Options& o, const Session& s, const CLI::App& sub) {
  const auto images = zseval::load_embeddings(o.images);
  const auto text = zseval::load_embeddings(o.ensemble.at(0));
  const auto records = prompt::load_prompts(o.ensemble.at(1));
  auto ens = zseval::ensemble_from_prompts(records, text);
  if (o.shots > 0) {
    if (o.support.empty() || o.support_labels.empty())
      throw Error(ErrorCode::InvalidArgument, "--shots needs --support and --support-labels");
    if (sub.get_option("--seed")->count() == 0)
      throw Error(ErrorCode::InvalidArgument, "--shots needs an explicit --seed");
    ens = zseval::few_shot_extend(ens, zseval::load_embeddings(o.support), zseval::load_labels(o.support_labels), o.shots, o.seed);
  }
  zseval::EvalOptions eo;
  eo.label = o.label.empty() ? fs::path(o.ensemble.at(1)).stem().string() : o.label;
  eo.config_hash = s.config_hash;
  eo.jobs = s.jobs;
  const auto rep = zseval::evaluate(images, zseval::load_labels(o.labels), ens, eo);
  write_file_bytes(o.report_path, zseval::serialize_report(rep));
  s.log(eo.label + ": top1=" + format_fixed(rep.top1, 4) + " over " + std::to_string(rep.n_images) + " images");
}

inline void do_compare(const Options& o, const Session& s) {
  const auto a = zseval::load_report(o.a);
  const auto b = zseval::load_report(o.b);
  const auto ranking = zseval::compare_runs(a, b, o.top);
  ojson j;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = s.config_hash;
  j["a"] = a.label;
  j["b"] = b.label;
  j["top1_a"] = a.top1;
  j["top1_b"] = b.top1;
  j["top1_delta"] = b.top1 - a.top1;
  j["top"] = o.top;
  auto rank = ojson::array();
  for (const auto& r : ranking)
    rank.push_back({{"class", r.name}, {"index", r.index}, {"acc_a", r.acc_a}, {"acc_b", r.acc_b}, {"delta", r.delta}});
  j["ranking"] = std::move(rank);
  std::string text = "rank  delta    class\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%4zu  %+.4f  ", i + 1, ranking[i].delta);
    text += buf + ranking[i].name + "\n";
  }
  if (!o.groups.empty()) {
    const auto overlap = zseval::group_overlap(ranking, textcluster::load_groups(o.groups));
    auto list = ojson::array();
    for (const auto& e : overlap) list.push_back({{"class", e.name}, {"group", e.group}});
    j["group_overlap"] = {{"count", overlap.size()}, {"classes", std::move(list)}};
    text += "classes sharing a habitat group: " + std::to_string(overlap.size()) + "\n";
  }
  if (!o.out.empty()) write_file_bytes(o.out, j.dump(2) + "\n");
  s.out << text;
}

inline void do_report(const Options& o, const Session& s) {
  const auto layout = parse_layout(o.layout);
  if (!layout) throw Error(ErrorCode::InvalidArgument, "unknown layout '" + o.layout + "'", o.layout);
  std::vector<ReportCell> cells;
  for (const auto& c : o.cells) {
    const auto p1 = c.find(',');
    const auto p2 = p1 == std::string::npos ? p1 : c.find(',', p1 + 1);
    if (p2 == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--cell takes row,column,report", c);
    cells.push_back({c.substr(0, p1), c.substr(p1 + 1, p2 - p1 - 1), zseval::load_report(c.substr(p2 + 1))});
  }
  auto r = emit_report(cells, *layout);
  r.json["tool_version"] = kToolVersion;
  r.json["config_hash"] = s.config_hash;
  if (!o.out.empty()) {
    write_file_bytes(o.out, r.text);
    fs::path jp = o.json_out.empty() ? fs::path(o.out).replace_extension(".json") : fs::path(o.json_out);
    write_file_bytes(jp, r.json.dump(2) + "\n");
  } else if (!o.json_out.empty()) {
    write_file_bytes(o.json_out, r.json.dump(2) + "\n");
  }
  s.out << r.text;
}

/// Substitutes {out} and {config_dir} in pipeline argument strings.
inline nlohmann::json substitute(const nlohmann::json& v, const std::string& out_root, const std::string& config_dir) {
  if (v.is_string()) {
    std::string t = v.get<std::string>();
    for (const auto& [key, val] : {std::pair<std::string, std::string>{"{out}", out_root}, {"{config_dir}", config_dir}}) {
      for (std::size_t p; (p = t.find(key)) != std::string::npos;) t.replace(p, key.size(), val);
    }
    return t;
  }
  if (v.is_array() || v.is_object()) {
    nlohmann::json c = v;
    for (auto& x : c) x = substitute(x, out_root, config_dir);
    return c;
  }
  return v;
}

inline int do_pipeline(const Options& o, const Session& s, bool quiet) {
  if (o.config.empty()) throw Error(ErrorCode::InvalidConfig, "pipeline needs --config");
  const nlohmann::json cfg = load_json(o.config);
  const std::string config_dir = fs::absolute(o.config).parent_path().lexically_normal().string();
  std::string out_root = o.out;
  if (out_root.empty()) {
    if (!cfg.contains("out") || !cfg["out"].is_string()) throw Error(ErrorCode::InvalidConfig, "pipeline config needs \"out\"", o.config);
    out_root = cfg["out"].get<std::string>();
    if (fs::path(out_root).is_relative()) out_root = (fs::path(config_dir) / out_root).string();
  }
  out_root = fs::absolute(out_root).lexically_normal().string();
  if (!cfg.contains("seed")) throw Error(ErrorCode::InvalidConfig, "pipeline config needs a \"seed\"", o.config);
  const std::string seed = cfg["seed"].dump();
  if (!cfg.contains("stages") || !cfg["stages"].is_array()) throw Error(ErrorCode::InvalidConfig, "pipeline config needs \"stages\"", o.config);

  ojson record;
  record["tool_version"] = kToolVersion;
  record["seed"] = cfg["seed"];
  auto stages = ojson::array();
  std::size_t index = 0;
  for (const auto& st : cfg["stages"]) {
    if (!st.is_object() || !st.contains("command")) throw Error(ErrorCode::InvalidConfig, "stage needs a \"command\"", o.config);
    const std::string cmd = st["command"].get<std::string>();
    if (cmd == "pipeline") throw Error(ErrorCode::InvalidConfig, "pipelines cannot nest", o.config);
    const nlohmann::json stage_args = substitute(st.value("args", nlohmann::json::object()), out_root, config_dir);
    const fs::path stage_cfg = fs::path(out_root) / ".pipeline" / (std::to_string(index) + "_" + cmd + ".json");
    write_file_bytes(stage_cfg, stage_args.dump(2) + "\n");
    std::vector<std::string> argv{"habitat-forge"};
    if (quiet) argv.push_back("--quiet");
    argv.insert(argv.end(), {cmd, "--config", stage_cfg.string(), "--jobs", std::to_string(s.jobs)});
    if (!stage_args.contains("seed") && cmd != "ingest" && cmd != "prompts" && cmd != "compare" && cmd != "report" &&
        cmd != "flybird")
      argv.insert(argv.end(), {"--seed", seed});
    s.log("stage " + std::to_string(index) + ": " + cmd);
    std::ostringstream stage_out;
    const int rc = run(argv, stage_out, s.err);
    s.out << stage_out.str();
    if (rc != 0) return rc;
    stages.push_back(cmd);
    ++index;
  }
  fs::remove_all(fs::path(out_root) / ".pipeline");
  record["stages"] = std::move(stages);
  write_file_bytes(fs::path(out_root) / "pipeline_run.json", record.dump(2) + "\n");
  return 0;
}

}  // namespace detail

/// Entry point. args[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  detail::Options o;
  bool quiet = false;
  CLI::App app{"habitat-forge: habitat-aware dataset building and zero-shot evaluation", "habitat-forge"};
  app.set_version_flag("--version", kToolVersion);
  app.add_flag("--quiet", quiet, "suppress progress logs");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  using detail::kCells;
  using detail::kInputs;
  using detail::kOutputs;
  using detail::kParams;

  auto* ingest = detail::add_common(app, "ingest", "validate a manifest (and descriptors) and write a normalized copy", o);
  ingest->add_option("--manifest", o.manifest)->required()->group(kInputs);
  ingest->add_option("--visual", o.visual)->group(kInputs);
  ingest->add_option("--habitat", o.habitat)->group(kInputs);
  ingest->add_option("--visual-kind", o.visual_kind, "mv|peeb|ssc")->capture_default_str()->group(kParams);
  ingest->add_flag("--no-media-check", o.no_media_check, "skip decoding images and masks")->group(kParams);
  ingest->add_option("--out", o.out, "output directory")->required()->group(kOutputs);

  auto* cluster = detail::add_common(app, "cluster", "group classes by habitat text (TF-IDF + k-means + silhouette)", o);
  cluster->add_option("--habitat", o.habitat)->required()->group(kInputs);
  cluster->add_option("--manifest", o.manifest, "validate class names against this manifest")->group(kInputs);
  cluster->add_option("--seed", o.seed)->required()->group(kParams);
  cluster->add_option("--k-min", o.k_min)->capture_default_str()->group(kParams);
  cluster->add_option("--k-max", o.k_max, "0: min(N-1, 250)")->capture_default_str()->group(kParams);
  cluster->add_option("--out", o.out, "groups file")->required()->group(kOutputs);

  auto* aug = detail::add_common(app, "augment", "plan and composite mixed-s / mixed-g / mixed-i images", o);
  aug->add_option("--manifest", o.manifest)->required()->group(kInputs);
  aug->add_option("--groups", o.groups)->group(kInputs);
  aug->add_option("--plan", o.plan_in, "execute this plan instead of drawing one")->group(kInputs);
  aug->add_option("--strategy", o.strategy, "mixed-s|mixed-g|mixed-i")->group(kParams);
  aug->add_option("--seed", o.seed)->group(kParams);
  aug->add_option("--copies", o.copies)->capture_default_str()->group(kParams);
  aug->add_option("--canvas-width", o.canvas_width)->capture_default_str()->group(kParams);
  aug->add_option("--canvas-height", o.canvas_height)->capture_default_str()->group(kParams);
  aug->add_option("--inpaint-iters", o.inpaint_iters)->capture_default_str()->group(kParams);
  aug->add_flag("--plan-only", o.plan_only)->group(kParams);
  aug->add_option("--out", o.out, "output directory")->required()->group(kOutputs);

  auto* pert = detail::add_common(app, "perturb", "build the perturbed test suite", o);
  pert->add_option("--manifest", o.manifest)->required()->group(kInputs);
  pert->add_option("--kinds", o.kinds, "all or a list of original,black-background,no-bird,black-boxes,big-box")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->capture_default_str()
      ->group(kParams);
  pert->add_option("--seed", o.seed)->required()->group(kParams);
  pert->add_option("--box-count", o.box_count)->capture_default_str()->group(kParams);
  pert->add_option("--box-frac", o.box_frac)->capture_default_str()->group(kParams);
  pert->add_option("--inpaint-iters", o.inpaint_iters)->capture_default_str()->group(kParams);
  pert->add_flag("--skip-missing", o.skip_missing)->group(kParams);
  pert->add_flag("--bbox-as-mask", o.bbox_as_mask)->group(kParams);
  pert->add_option("--out", o.out, "output directory")->required()->group(kOutputs);

  auto* fly = detail::add_common(app, "flybird", "split into FlyBird / Non-FlyBird from panoptic label maps", o);
  fly->add_option("--manifest", o.manifest)->required()->group(kInputs);
  fly->add_option("--rule", o.rule, "JSON rule file")->group(kInputs);
  fly->add_option("--legend", o.legend, "legend for maps without a sidecar")->group(kInputs);
  fly->add_option("--sky-min-frac", o.sky_min_frac)->group(kParams);
  fly->add_option("--ground-max-frac", o.ground_max_frac)->group(kParams);
  fly->add_option("--out", o.out, "output directory")->required()->group(kOutputs);

  auto* prm = detail::add_common(app, "prompts", "build prompt ensembles", o);
  prm->add_option("--manifest", o.manifest)->required()->group(kInputs);
  prm->add_option("--visual", o.visual)->group(kInputs);
  prm->add_option("--habitat", o.habitat)->group(kInputs);
  prm->add_option("--visual-kind", o.visual_kind, "mv|peeb|ssc")->capture_default_str()->group(kParams);
  prm->add_option("--direction", o.direction, "none|common-to-scientific|scientific-to-common")->capture_default_str()->group(kParams);
  prm->add_option("--missing-habitat", o.missing_habitat, "error|visual-only")->capture_default_str()->group(kParams);
  prm->add_flag("--baseline", o.baseline, "prepend 'A photo of a {c}.' to each ensemble")->group(kParams);
  prm->add_flag("--baseline-only", o.baseline_only)->group(kParams);
  prm->add_option("--out", o.out, "prompt file")->required()->group(kOutputs);

  auto* ev = detail::add_common(app, "eval", "score image embeddings against prompt ensembles", o);
  ev->add_option("--images", o.images)->required()->group(kInputs);
  ev->add_option("--ensemble", o.ensemble, "text embeddings and prompt file")->expected(2)->required()->group(kInputs);
  ev->add_option("--labels", o.labels)->required()->group(kInputs);
  ev->add_option("--support", o.support, "support-image embeddings for few-shot")->group(kInputs);
  ev->add_option("--support-labels", o.support_labels)->group(kInputs);
  ev->add_option("--shots", o.shots)->capture_default_str()->group(kParams);
  ev->add_option("--seed", o.seed)->group(kParams);
  ev->add_option("--label", o.label, "run label (default: prompt file stem)")->group(kParams);
  ev->add_option("--report", o.report_path)->required()->group(kOutputs);

  auto* cmp = detail::add_common(app, "compare", "rank class-wise accuracy changes between two reports", o);
  cmp->add_option("--a", o.a)->required()->group(kInputs);
  cmp->add_option("--b", o.b)->required()->group(kInputs);
  cmp->add_option("--groups", o.groups)->group(kInputs);
  cmp->add_option("--top", o.top, "0 keeps all classes")->capture_default_str()->group(kParams);
  cmp->add_option("--out", o.out, "JSON output")->group(kOutputs);

  auto* rep = detail::add_common(app, "report", "tabulate reports with Avg and delta rows", o);
  rep->add_option("--cell", o.cells, "row,column,report.json (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required()
      ->group(kCells);
  rep->add_option("--layout", o.layout, "table3_like|table6_like")->required()->group(kParams);
  rep->add_option("--out", o.out, "text output")->group(kOutputs);
  rep->add_option("--json", o.json_out, "JSON twin (default: --out with .json)")->group(kOutputs);

  auto* pipe = detail::add_common(app, "pipeline", "run an ordered list of subcommands from one config", o);
  pipe->add_option("--out", o.out, "output root (overrides the config's \"out\")")->group(kOutputs);

  std::string stage = args.size() > 1 ? args[1] : "";
  try {
    // Expand --config into tokens ahead of the user's own arguments.
    std::vector<std::string> full = args;
    std::size_t sub_pos = 1;
    while (sub_pos < full.size() && full[sub_pos].rfind("--", 0) == 0) ++sub_pos;
    if (sub_pos < full.size()) {
      stage = full[sub_pos];
      CLI::App* sub = app.get_subcommand_no_throw(stage);
      std::string cfg_path;
      for (std::size_t i = sub_pos + 1; i < full.size(); ++i) {
        if (full[i] == "--config" && i + 1 < full.size()) cfg_path = full[i + 1];
        else if (full[i].rfind("--config=", 0) == 0) cfg_path = full[i].substr(9);
      }
      if (sub && !cfg_path.empty() && stage != "pipeline") {
        const auto toks = detail::config_tokens(*sub, detail::load_json(cfg_path), full, sub_pos + 1, cfg_path);
        full.insert(full.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, toks.begin(), toks.end());
      }
    }
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::CallForVersion&) {
      out << kToolVersion << "\n";
      return 0;
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return 0;
      }
      emit_error(err, stage, "InvalidArgument", "", 0, e.what());
      return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    Session s{out, err, quiet, sub->get_name(), detail::config_hash(*sub), o.jobs};
    const std::string name = sub->get_name();
    if (name == "ingest") detail::do_ingest(o, s);
    else if (name == "cluster") detail::do_cluster(o, s);
    else if (name == "augment") detail::do_augment(o, s);
    else if (name == "perturb") detail::do_perturb(o, s);
    else if (name == "flybird") detail::do_flybird(o, s);
    else if (name == "prompts") detail::do_prompts(o, s);
    else if (name == "eval") detail::do_eval(o, s, *sub);
    else if (name == "compare") detail::do_compare(o, s);
    else if (name == "report") detail::do_report(o, s);
    else if (name == "pipeline") return detail::do_pipeline(o, s, quiet);
    return 0;
  } catch (const Error& e) {
    emit_error(err, stage, std::string(to_string(e.code())), e.instance(), e.line(), e.detail());
    return kExitError;
  } catch (const std::exception& e) {
    emit_error(err, stage, "Internal", "", 0, e.what());
    return kExitInternal;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace habitat::cli
