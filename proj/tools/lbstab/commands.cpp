#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lbstab/error.hpp"
#include "lbstab/io.hpp"
#include "lbstab/rng.hpp"
#include "scenario.hpp"

namespace lbstab::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

constexpr const char* kConcordanceHeader =
    "scenario_hash,seed,verdict,synchronized,blowup,sync_time,empirical_rate,analytic_rate";

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
  if (!os) throw ConfigError("failed writing " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path resolve_out_dir(const GlobalOptions& g, const Scenario* s) {
  fs::path dir = g.out_dir ? fs::path(*g.out_dir) : s ? s->output_dir : fs::path("out");
  fs::create_directories(dir);
  return dir;
}

Scenario require_scenario(const GlobalOptions& g) {
  if (!g.scenario) throw SchemaError("--scenario <file> is required");
  return load_scenario(*g.scenario, g.seed);
}

int verdict_exit_code(Verdict v) {
  switch (v) {
    case Verdict::Stable: return kExitOk;
    case Verdict::Unstable: return kExitUnstable;
    case Verdict::NotGuaranteed: return kExitNotGuaranteed;
  }
  return kExitError;
}

// Merges one command's entry into <dir>/manifest.json.
void update_manifest(const fs::path& dir, const std::string& command, const std::string& hash,
                     std::uint64_t seed, const std::vector<std::string>& streams,
                     std::vector<std::string> files, const Json& summary) {
  const fs::path path = dir / "manifest.json";
  Json m = Json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      m = Json::parse(in);
    } catch (const Json::parse_error&) {
      m = Json::object();
    }
  }
  m["tool_version"] = kToolVersion;
  Json entry = Json::object();
  entry["scenario_hash"] = hash;
  entry["seed"] = seed;
  Json seeds = Json::object();
  for (const auto& s : streams) seeds[s] = derive_seed(seed, s);
  entry["seeds"] = seeds;
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  entry["files"] = files;
  entry["summary"] = summary;
  m["commands"][command] = entry;
  write_json(path, m);
}

std::string describe_clusters(const std::vector<LoadCluster>& clusters) {
  std::string s;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (k) s += "; ";
    s += "l=" + short_num(clusters[k].representative) + " cells {";
    for (std::size_t m = 0; m < clusters[k].members.size(); ++m) {
      if (m) s += ",";
      s += std::to_string(clusters[k].members[m]);
    }
    s += "}";
  }
  return s;
}

struct AuditRun {
  StabilityReport report;
};

AuditRun run_audit(const Scenario& s, const fs::path& dir, std::ostream& out) {
  AuditRun r{audit(s.topology, s.policies, audit_options(s))};
  write_json(dir / "report.json", io::to_json(r.report));
  out << "verdict: " << to_string(r.report.verdict.verdict) << "\n";
  if (!r.report.verdict.rationale.empty()) out << "rationale: " << r.report.verdict.rationale << "\n";
  for (const auto& c : r.report.verdict.culprits) out << "cell " << c.cell << ": " << c.reason << "\n";
  update_manifest(dir, "audit", s.hash, s.seed, {"topology.sites", "topology.edges", "policies"},
                  {"report.json"},
                  Json{{"verdict", to_string(r.report.verdict.verdict)},
                       {"culprits", r.report.verdict.culprits.size()}});
  return r;
}

struct SimulateRun {
  StabilityReport report;
  SyncMetrics metrics;
  bool blowup = false;
  std::optional<double> analytic_rate;
};

std::string concordance_row(const Scenario& s, const SimulateRun& r) {
  std::ostringstream os;
  os << s.hash << "," << s.seed << "," << to_string(r.report.verdict.verdict) << ","
     << (r.metrics.synchronized ? "true" : "false") << "," << (r.blowup ? "true" : "false") << ","
     << opt_num(r.metrics.sync_time) << "," << opt_num(r.metrics.empirical_rate) << ","
     << opt_num(r.analytic_rate) << "\n";
  return os.str();
}

void append_concordance(const fs::path& dir, const std::string& rows) {
  const fs::path path = dir / "concordance.csv";
  const bool fresh = !fs::exists(path);
  std::ofstream os(path, std::ios::binary | std::ios::app);
  if (!os) throw ConfigError("cannot append to " + path.string());
  if (fresh) os << kConcordanceHeader << "\n";
  os << rows;
}

SimulateRun run_simulate(const Scenario& s, const fs::path& dir, std::ostream& out) {
  SimulateRun r;
  r.report = audit(s.topology, s.policies, audit_options(s));
  std::vector<std::string> files = {"trajectory.csv", "metrics.json", "clusters.json"};

  if (s.initial.kind == InitialSpec::Kind::FromRadio) {
    const auto snap = radio_snapshot(s);
    std::ostringstream csv;
    io::write_snapshot_csv(csv, *snap);
    write_file(dir / "snapshot.csv", csv.str());
    write_json(dir / "snapshot.json", io::to_json(*snap));
    files.push_back("snapshot.csv");
    files.push_back("snapshot.json");
  }
  const auto initial = initial_loads(s);
  const Trajectory traj = integrate(s.simulation, initial, s.topology, s.policies);
  r.blowup = traj.blowup;
  r.metrics = sync_metrics(traj, s.simulation);
  const auto clusters = classify_terminal_states(traj, s.policies, &r.report.verdict.culprits);
  if (r.report.verdict.verdict == Verdict::Stable) r.analytic_rate = r.report.slowest_rate;

  std::ostringstream csv;
  io::write_trajectory_csv(csv, traj);
  write_file(dir / "trajectory.csv", csv.str());

  Json metrics = io::to_json(r.metrics);
  metrics["blowup"] = traj.blowup;
  if (traj.blowup) metrics["blowup_reason"] = traj.blowup_reason;
  metrics["analytic_verdict"] = to_string(r.report.verdict.verdict);
  metrics["analytic_rate"] = r.analytic_rate ? Json(*r.analytic_rate) : Json(nullptr);
  if (r.report.disagreement_rate) metrics["analytic_disagreement_rate"] = *r.report.disagreement_rate;
  write_json(dir / "metrics.json", metrics);
  write_json(dir / "clusters.json", io::to_json(clusters));

  if (traj.blowup) {
    out << "blowup: " << traj.blowup_reason << "\n";
  } else if (r.metrics.synchronized) {
    out << "synchronized at t=" << short_num(*r.metrics.sync_time) << "\n";
  } else {
    out << "not synchronized; clusters: " << describe_clusters(r.metrics.terminal_clusters) << "\n";
  }
  out << "analytic verdict: " << to_string(r.report.verdict.verdict) << "\n";
  if (r.metrics.empirical_rate) out << "empirical rate: " << short_num(*r.metrics.empirical_rate) << "\n";
  if (r.analytic_rate) {
    out << "analytic rate: " << short_num(*r.analytic_rate) << "\n";
    if (r.metrics.empirical_rate && *r.analytic_rate != 0.0) {
      const double rel = std::abs(*r.metrics.empirical_rate - *r.analytic_rate) / std::abs(*r.analytic_rate);
      out << "relative rate difference: " << short_num(rel) << "\n";
    }
  }
  update_manifest(dir, "simulate", s.hash, s.seed,
                  {"topology.sites", "topology.edges", "policies", "initial", "perturb", "users"}, files,
                  Json{{"verdict", to_string(r.report.verdict.verdict)},
                       {"synchronized", r.metrics.synchronized},
                       {"blowup", traj.blowup}});
  return r;
}

struct VaryAxis {
  Json::json_pointer pointer;
  std::string label;
  std::vector<Json> values;
};

VaryAxis parse_vary(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw SchemaError("--vary expects <json-pointer>=v1,v2,...");
  VaryAxis axis;
  axis.label = spec.substr(0, eq);
  try {
    axis.pointer = Json::json_pointer(axis.label);
  } catch (const Json::exception& e) {
    throw SchemaError("invalid JSON pointer \"" + axis.label + "\": " + e.what());
  }
  std::string rest = spec.substr(eq + 1);
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw SchemaError("empty value in --vary " + axis.label);
    try {
      axis.values.push_back(Json::parse(item));
    } catch (const Json::parse_error&) {
      axis.values.emplace_back(item);
    }
  }
  if (axis.values.empty()) throw SchemaError("--vary " + axis.label + " lists no values");
  return axis;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    err << "error: malformed scenario: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace

int cmd_generate(const GlobalOptions& g, const GenerateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto x = o.region.find_first_of("xX");
    if (x == std::string::npos) throw SchemaError("--region expects WIDTHxHEIGHT in meters");
    Region region;
    try {
      region = Region{std::stod(o.region.substr(0, x)), std::stod(o.region.substr(x + 1))};
    } catch (const std::exception&) {
      throw SchemaError("--region expects WIDTHxHEIGHT in meters");
    }
    if (!(region.width > 0.0 && region.height > 0.0)) throw SchemaError("--region must be positive");
    if (!(o.probability >= 0.0 && o.probability <= 1.0)) throw SchemaError("--prob must lie in [0, 1]");
    const std::uint64_t seed = g.seed.value_or(0);
    std::vector<CellSite> sites =
        o.sites ? generate_uniform_sites(*o.sites, region, derive_seed(seed, "topology.sites"))
                : generate_ppp(o.intensity_per_km2 * 1e-6, region, derive_seed(seed, "topology.sites"));
    NetworkTopology topo = build_neighbor_graph(std::move(sites), region, o.probability,
                                                derive_seed(seed, "topology.edges"));
    const auto spec = spectrum(laplacian(topo));
    const auto components = connected_components(topo);

    const fs::path dir = resolve_out_dir(g, nullptr);
    write_json(dir / "topology.json", io::to_json(topo));
    std::ostringstream csv;
    io::write_spectrum_csv(csv, spec);
    write_file(dir / "spectrum.csv", csv.str());

    out << "cells: " << topo.size() << "\n";
    out << "edges: " << topo.edges().size() << "\n";
    out << "lambda_2: " << short_num(spec.algebraic_connectivity) << "\n";
    out << "lambda_N: " << short_num(spec.spectral_radius) << "\n";
    out << "components: " << components.size() << "\n";
    if (components.size() > 1) err << "warning: graph disconnected; per-component analysis will apply\n";

    std::ostringstream args;
    args << "intensity_per_km2=" << io::format_double(o.intensity_per_km2) << ";region="
         << o.region << ";prob=" << io::format_double(o.probability)
         << ";sites=" << (o.sites ? std::to_string(*o.sites) : "ppp");
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a64(args.str())));
    update_manifest(dir, "generate", hash, seed, {"topology.sites", "topology.edges"},
                    {"topology.json", "spectrum.csv"},
                    Json{{"cells", topo.size()},
                         {"edges", topo.edges().size()},
                         {"components", components.size()},
                         {"lambda_2", spec.algebraic_connectivity},
                         {"lambda_N", spec.spectral_radius}});
    return kExitOk;
  });
}

int cmd_fit(const GlobalOptions& g, const FitOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(o.samples);
    if (!in) throw SchemaError("cannot open samples " + o.samples);
    const auto samples = io::read_samples_csv(in);
    const FitResult fit = fit_policy(samples, o.degree);
    const PolicyDiagnostics diag = validate_policy(fit.policy);
    Json j = io::to_json(fit.policy);
    j["fit"] = Json{{"degree", o.degree},
                    {"samples", samples.size()},
                    {"residual_rms", fit.residual_rms},
                    {"constant_adjustment", fit.constant_adjustment},
                    {"slope_at_one", diag.slope_at_one},
                    {"messages", diag.messages}};
    fs::path path;
    if (o.output) {
      path = *o.output;
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
    } else {
      path = resolve_out_dir(g, nullptr) / "policy.json";
    }
    write_json(path, j);
    out << "coeffs:";
    for (double c : fit.policy.active_branch().coeffs()) out << " " << short_num(c);
    out << "\nresidual_rms: " << short_num(fit.residual_rms) << "\n";
    for (const auto& m : diag.messages) err << "warning: " << m << "\n";
    return kExitOk;
  });
}

int cmd_audit(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = require_scenario(g);
    const fs::path dir = resolve_out_dir(g, &s);
    const AuditRun r = run_audit(s, dir, out);
    return verdict_exit_code(r.report.verdict.verdict);
  });
}

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!g.scenario) throw SchemaError("--scenario <file> is required");
    std::ifstream in(*g.scenario);
    if (!in) throw SchemaError("cannot open scenario " + *g.scenario);
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (o.initial) {
      if (!doc.contains("simulation")) doc["simulation"] = Json::object();
      Json& init = doc["simulation"]["initial"];
      if (!init.is_object() || init.value("kind", std::string()) != *o.initial)
        init = Json{{"kind", *o.initial}};
    }
    const Scenario s = parse_scenario(doc, fs::path(*g.scenario).parent_path(), g.seed);
    const fs::path dir = resolve_out_dir(g, &s);
    const SimulateRun r = run_simulate(s, dir, out);
    append_concordance(dir, concordance_row(s, r));
    return r.blowup ? kExitBlowup : kExitOk;
  });
}

int cmd_sweep(const GlobalOptions& g, const SweepOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!g.scenario) throw SchemaError("--scenario <file> is required");
    if (o.vary.empty()) throw SchemaError("sweep needs at least one --vary");
    if (g.format != "json" && g.format != "csv") throw SchemaError("--format must be json or csv");
    std::ifstream in(*g.scenario);
    if (!in) throw SchemaError("cannot open scenario " + *g.scenario);
    Json base;
    try {
      base = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
    }
    std::vector<VaryAxis> axes;
    for (const auto& v : o.vary) {
      axes.push_back(parse_vary(v));
      const auto& ptr = axes.back().pointer;
      if (ptr.empty() || !base.contains(ptr.parent_pointer()))
        throw SchemaError("sweep target " + axes.back().label + " has no parent in the scenario");
    }
    // Cartesian product, last axis fastest.
    std::vector<std::vector<std::size_t>> combos{{}};
    for (const auto& axis : axes) {
      std::vector<std::vector<std::size_t>> next;
      for (const auto& c : combos)
        for (std::size_t k = 0; k < axis.values.size(); ++k) {
          auto e = c;
          e.push_back(k);
          next.push_back(std::move(e));
        }
      combos = std::move(next);
    }
    const fs::path base_dir = fs::path(*g.scenario).parent_path();
    const fs::path root = g.out_dir ? fs::path(*g.out_dir) : [&] {
      fs::path p = base.value("output", std::string("out"));
      return p.is_relative() ? base_dir / p : p;
    }();
    fs::create_directories(root);

    struct Outcome {
      std::string verdict = "error";
      std::optional<SimulateRun> run;
      std::string concordance;
      std::string error;
    };
    std::vector<Outcome> outcomes(combos.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < combos.size(); k = next++) {
        try {
          Json doc = base;
          for (std::size_t a = 0; a < axes.size(); ++a) doc[axes[a].pointer] = axes[a].values[combos[k][a]];
          const Scenario s = parse_scenario(doc, base_dir, g.seed);
          char name[32];
          std::snprintf(name, sizeof(name), "variant_%03zu", k);
          const fs::path dir = root / name;
          fs::create_directories(dir);
          write_json(dir / "scenario.json", doc);
          std::ostringstream sink;
          run_audit(s, dir, sink);
          SimulateRun r = run_simulate(s, dir, sink);
          write_file(dir / "stdout.txt", sink.str());
          outcomes[k].verdict = std::string(to_string(r.report.verdict.verdict));
          outcomes[k].concordance = concordance_row(s, r);
          outcomes[k].run = std::move(r);
        } catch (const std::exception& e) {
          outcomes[k].error = e.what();
        }
      }
    };
    std::size_t threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, combos.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::string rows;
    for (const auto& oc : outcomes) rows += oc.concordance;
    if (!rows.empty()) append_concordance(root, rows);

    std::ostringstream csv;
    csv << "variant";
    for (const auto& a : axes) csv << "," << a.label;
    csv << ",verdict,synchronized,blowup,sync_time,empirical_rate,analytic_rate,error\n";
    Json summary = Json::array();
    bool any_error = false;
    for (std::size_t k = 0; k < combos.size(); ++k) {
      const auto& oc = outcomes[k];
      Json row;
      row["variant"] = k;
      csv << k;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const Json& v = axes[a].values[combos[k][a]];
        row[axes[a].label] = v;
        csv << "," << (v.is_string() ? v.get<std::string>() : v.dump());
      }
      row["verdict"] = oc.verdict;
      csv << "," << oc.verdict;
      if (oc.run) {
        row["synchronized"] = oc.run->metrics.synchronized;
        row["blowup"] = oc.run->blowup;
        row["sync_time"] = oc.run->metrics.sync_time ? Json(*oc.run->metrics.sync_time) : Json(nullptr);
        row["empirical_rate"] =
            oc.run->metrics.empirical_rate ? Json(*oc.run->metrics.empirical_rate) : Json(nullptr);
        row["analytic_rate"] = oc.run->analytic_rate ? Json(*oc.run->analytic_rate) : Json(nullptr);
        csv << "," << (oc.run->metrics.synchronized ? "true" : "false") << ","
            << (oc.run->blowup ? "true" : "false") << "," << opt_num(oc.run->metrics.sync_time) << ","
            << opt_num(oc.run->metrics.empirical_rate) << "," << opt_num(oc.run->analytic_rate) << ",";
      } else {
        any_error = true;
        row["error"] = oc.error;
        std::string e = oc.error;
        std::replace(e.begin(), e.end(), ',', ';');
        csv << ",,,,,," << e;
      }
      csv << "\n";
      summary.push_back(row);
      if (!oc.error.empty()) err << "variant " << k << ": " << oc.error << "\n";
    }
    write_file(root / "sweep.csv", csv.str());
    write_json(root / "sweep.json", summary);
    if (g.format == "csv")
      out << csv.str();
    else
      out << summary.dump(2) << "\n";
    return any_error ? kExitError : kExitOk;
  });
}

int cmd_report(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (g.format != "json" && g.format != "csv") throw SchemaError("--format must be json or csv");
    std::optional<Scenario> s;
    if (g.scenario) s = require_scenario(g);
    const fs::path dir = g.out_dir ? fs::path(*g.out_dir) : s ? s->output_dir : fs::path("out");
    const fs::path path = dir / "concordance.csv";
    std::ifstream in(path);
    if (!in) throw ConfigError("no concordance ledger at " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != kConcordanceHeader) throw SchemaError("unexpected concordance header in " + path.string());
    // (verdict, outcome) -> count; outcome is synchronized | unsynchronized | blowup.
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    std::size_t runs = 0, concordant = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.size() != 8) throw SchemaError("malformed concordance row: " + line);
      const std::string& verdict = cells[2];
      const std::string outcome =
          cells[4] == "true" ? "blowup" : cells[3] == "true" ? "synchronized" : "unsynchronized";
      ++counts[{verdict, outcome}];
      ++runs;
      // Stable must synchronize; Unstable must not. NotGuaranteed makes no promise.
      if ((verdict == "Stable" && outcome == "synchronized") ||
          (verdict == "Unstable" && outcome != "synchronized") || verdict == "NotGuaranteed")
        ++concordant;
    }
    if (g.format == "csv") {
      out << "verdict,outcome,runs\n";
      for (const auto& [key, n] : counts) out << key.first << "," << key.second << "," << n << "\n";
    } else {
      Json j;
      j["runs"] = runs;
      j["concordant"] = concordant;
      Json table = Json::array();
      for (const auto& [key, n] : counts)
        table.push_back(Json{{"verdict", key.first}, {"outcome", key.second}, {"runs", n}});
      j["pairs"] = table;
      out << j.dump(2) << "\n";
    }
    return concordant == runs ? kExitOk : kExitNotGuaranteed;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability audit and simulation of coupled cell load-balancing policies", "lbstab"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  GlobalOptions g;
  std::uint64_t seed = 0;
  std::string scenario, out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Root seed (overrides the scenario seed)");
  auto* scen_opt = app.add_option("--scenario", scenario, "Scenario JSON file");
  auto* out_opt = app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--format", g.format, "Tabular output format")->check(CLI::IsMember({"json", "csv"}));

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Generate a random deployment and its neighbor graph");
  generate->add_option("--intensity", gen.intensity_per_km2, "Site intensity per km^2")
      ->check(CLI::PositiveNumber);
  generate->add_option("--region", gen.region, "Region WIDTHxHEIGHT in meters");
  generate->add_option("--prob,-P", gen.probability, "Edge retention probability")
      ->check(CLI::Range(0.0, 1.0));
  std::size_t site_count = 0;
  auto* sites_opt = generate->add_option("--sites", site_count, "Fixed site count instead of a Poisson draw");

  FitOptions fit;
  auto* fitc = app.add_subcommand("fit", "Fit a polynomial local policy to (load, rate) samples");
  fitc->add_option("samples,--samples", fit.samples, "CSV with load and rate columns")->required();
  fitc->add_option("--degree", fit.degree, "Polynomial degree");
  std::string fit_out;
  auto* fit_out_opt = fitc->add_option("--output,-o", fit_out, "Policy JSON path");

  auto* auditc = app.add_subcommand("audit", "Stability verdict for a scenario");

  SimulateOptions sim;
  std::string initial;
  auto* simc = app.add_subcommand("simulate", "Integrate a scenario and measure synchronization");
  auto* init_opt = simc->add_option("--initial", initial, "Initial load source")
                       ->check(CLI::IsMember({"uniform", "perturb", "from-radio", "explicit"}));

  SweepOptions sweep;
  auto* sweepc = app.add_subcommand("sweep", "Run scenario variants in parallel");
  sweepc->add_option("--vary", sweep.vary, "<json-pointer>=v1,v2,... (repeatable)")->required();
  sweepc->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");

  auto* reportc = app.add_subcommand("report", "Summarize the verdict/outcome ledger");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitError;
  }
  if (*seed_opt) g.seed = seed;
  if (*scen_opt) g.scenario = scenario;
  if (*out_opt) g.out_dir = out_dir;
  if (*sites_opt) gen.sites = site_count;
  if (*fit_out_opt) fit.output = fit_out;
  if (*init_opt) sim.initial = initial;

  if (generate->parsed()) return cmd_generate(g, gen, out, err);
  if (fitc->parsed()) return cmd_fit(g, fit, out, err);
  if (auditc->parsed()) return cmd_audit(g, out, err);
  if (simc->parsed()) return cmd_simulate(g, sim, out, err);
  if (sweepc->parsed()) return cmd_sweep(g, sweep, out, err);
  if (reportc->parsed()) return cmd_report(g, out, err);
  return kExitError;
}

}  // namespace lbstab::cli
