// evi command line front end: parses a JSON run configuration, drives the
// shared library through its C interface and emits JSON/CSV artifacts.
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evi/evi.h"
#include "json.hpp"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(evi_status status, const std::string& context) {
  if (status == EVI_OK) return;
  const std::string msg = context + ": " + evi_last_error();
  if (status == EVI_ERR_ARGUMENT) throw ConfigError(msg);
  throw NumericError(msg);
}

void require_keys(const Json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError("config error in " + where + ": expected an object");
  for (const auto& item : obj.items())
    if (allowed.find(item.key()) == allowed.end())
      throw ConfigError("config error in " + where + ": unknown key '" +
                        item.key() + "'");
}

const Json& require(const Json& obj, const std::string& where,
                    const std::string& key) {
  if (!obj.contains(key))
    throw ConfigError("config error: missing " + where + "." + key);
  return obj.at(key);
}

double finite(double v, const std::string& what) {
  if (!std::isfinite(v))
    throw NumericError("non-finite value in " + what);
  return v;
}

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// RAII wrappers for the C handles.
struct System {
  evi_system* ptr = nullptr;
  ~System() { evi_system_destroy(ptr); }
};
struct Vec {
  evi_vec* ptr = nullptr;
  ~Vec() { evi_vec_destroy(ptr); }
};
struct Solution {
  evi_vi_solution* ptr = nullptr;
  ~Solution() { evi_vi_solution_destroy(ptr); }
};
struct Derivative {
  evi_derivative* ptr = nullptr;
  ~Derivative() { evi_derivative_destroy(ptr); }
};
struct WitnessTable {
  evi_witness_table* ptr = nullptr;
  ~WitnessTable() { evi_witness_table_destroy(ptr); }
};

struct Options {
  std::string config_path;
  std::string out_path;
  std::vector<std::string> overrides;
  bool quiet = false;
};

Json load_config(const Options& opts) {
  Json config = Json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in)
      throw ConfigError("config error: cannot open '" + opts.config_path +
                        "'");
    try {
      config = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config error: " + std::string(e.what()));
    }
  }
  // --set key.path=value, parsed as JSON when possible, else as string
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config error: --set expects key=value, got '" + kv +
                        "'");
    const std::string path = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(raw);
    } catch (const Json::parse_error&) {
      value = raw;
    }
    Json* node = &config;
    std::istringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty())
      throw ConfigError("config error: empty --set key");
    for (size_t i = 0; i + 1 < parts.size(); ++i)
      node = &(*node)[parts[i]];
    (*node)[parts.back()] = value;
  }
  if (!opts.out_path.empty()) config["output"]["path"] = opts.out_path;
  return config;
}

System make_system(const Json& config) {
  const Json& mesh = require(config, "config", "mesh");
  require_keys(mesh, "mesh", {"dim", "n", "alignment"});
  const Json& dim = require(mesh, "mesh", "dim");
  const Json& n = require(mesh, "mesh", "n");
  if (!dim.is_number_integer())
    throw ConfigError("config error in mesh.dim: expected an integer");
  if (!n.is_number_integer())
    throw ConfigError("config error in mesh.n: expected an integer");
  std::string alignment;
  if (mesh.contains("alignment")) {
    if (!mesh["alignment"].is_string())
      throw ConfigError("config error in mesh.alignment: expected a string");
    alignment = mesh["alignment"].get<std::string>();
  }
  System sys;
  check(evi_system_create(dim.get<int>(), n.get<int>(),
                          alignment.empty() ? nullptr : alignment.c_str(),
                          &sys.ptr),
        "config error in mesh");
  return sys;
}

Vec make_load(const System& sys, const Json& problem, const std::string& key) {
  const Json& spec = require(problem, "problem", key);
  if (!spec.is_string())
    throw ConfigError("config error in problem." + key +
                      ": expected a spec string");
  Vec vec;
  check(evi_load_create(sys.ptr, spec.get<std::string>().c_str(), &vec.ptr),
        "config error in problem." + key);
  return vec;
}

Json mesh_block(const Json& config, const System& sys) {
  Json out;
  out["dim"] = evi_system_dim(sys.ptr);
  out["n"] = config["mesh"]["n"];
  if (config["mesh"].contains("alignment"))
    out["alignment"] = config["mesh"]["alignment"];
  out["h"] = evi_system_mesh_size(sys.ptr);
  return out;
}

Json coords_block(const System& sys) {
  const int n = evi_system_interior_count(sys.ptr);
  std::vector<double> xs(n), ys(n);
  const bool is2d = evi_system_dim(sys.ptr) == 2;
  check(evi_system_coords(sys.ptr, xs.data(), is2d ? ys.data() : nullptr),
        "coords");
  Json out;
  out["x"] = xs;
  if (is2d) out["y"] = ys;
  return out;
}

std::vector<double> finite_all(std::vector<double> v, const std::string& what) {
  for (double x : v) finite(x, what);
  return v;
}

void write_text(const std::string& path, const std::string& text,
                bool quiet) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("config error: cannot write '" + path + "'");
  out << text;
  if (!quiet) std::cout << "wrote " << path << "\n";
}

std::string out_path(const Json& config, const char* fallback) {
  if (config.contains("output")) {
    require_keys(config["output"], "output", {"path", "fd_path"});
    if (config["output"].contains("path"))
      return config["output"]["path"].get<std::string>();
  }
  return fallback;
}

int cmd_solve(const Json& config, const Options& opts) {
  require_keys(config, "config", {"mesh", "problem", "solve", "output"});
  System sys = make_system(config);
  const Json& problem = require(config, "config", "problem");
  require_keys(problem, "problem", {"f", "g"});
  Vec f = make_load(sys, problem, "f");

  double tol = 1e-10;
  if (config.contains("solve")) {
    require_keys(config["solve"], "solve", {"tol"});
    if (config["solve"].contains("tol"))
      tol = config["solve"]["tol"].get<double>();
  }

  Solution sol;
  check(evi_vi_solve(sys.ptr, f.ptr, tol, &sol.ptr), "solve");

  const int n = evi_system_interior_count(sys.ptr);
  std::vector<double> y(n), q(n);
  check(evi_vi_solution_y(sol.ptr, y.data()), "solve");
  check(evi_vi_solution_q(sol.ptr, q.data()), "solve");

  Json artifact;
  artifact["command"] = "solve";
  artifact["mesh"] = mesh_block(config, sys);
  artifact["f"] = problem["f"];
  artifact["tolerance"] = tol;
  artifact["coords"] = coords_block(sys);
  artifact["y"] = finite_all(std::move(y), "y");
  artifact["q"] = finite_all(std::move(q), "q");
  artifact["residuals"] = {
      {"duality", finite(evi_vi_solution_duality_residual(sol.ptr), "residual")},
      {"complementarity_gap",
       finite(evi_vi_solution_complementarity_gap(sol.ptr), "residual")},
      {"cross_gap", finite(evi_vi_solution_cross_gap(sol.ptr), "residual")}};
  artifact["iterations"] = evi_vi_solution_iterations(sol.ptr);
  Json flags = Json::array();
  if (evi_vi_solution_zero(sol.ptr)) flags.push_back("inactive-interior");
  artifact["flags"] = flags;

  write_text(out_path(config, "solve.json"), artifact.dump(2) + "\n",
             opts.quiet);
  return 0;
}

int cmd_derivative(const Json& config, const Options& opts) {
  require_keys(config, "config", {"mesh", "problem", "derivative", "output"});
  System sys = make_system(config);
  const Json& problem = require(config, "config", "problem");
  require_keys(problem, "problem", {"f", "g"});
  Vec f = make_load(sys, problem, "f");
  Vec g = make_load(sys, problem, "g");

  std::vector<double> t_list;
  bool hadamard = false;
  if (config.contains("derivative")) {
    require_keys(config["derivative"], "derivative", {"t_list", "hadamard"});
    if (config["derivative"].contains("t_list"))
      t_list = config["derivative"]["t_list"].get<std::vector<double>>();
    if (config["derivative"].contains("hadamard"))
      hadamard = config["derivative"]["hadamard"].get<bool>();
  }

  Derivative der;
  check(evi_derivative_solve(sys.ptr, f.ptr, g.ptr, &der.ptr), "derivative");

  const int n = evi_system_interior_count(sys.ptr);
  std::vector<double> delta(n), eta(n);
  std::string tags(n, '?');
  check(evi_derivative_delta(der.ptr, delta.data()), "derivative");
  check(evi_derivative_eta(der.ptr, eta.data()), "derivative");
  check(evi_derivative_cone_tags(der.ptr, tags.data()), "derivative");

  Json artifact;
  artifact["command"] = "derivative";
  artifact["mesh"] = mesh_block(config, sys);
  artifact["f"] = problem["f"];
  artifact["g"] = problem["g"];
  artifact["coords"] = coords_block(sys);
  artifact["delta"] = finite_all(std::move(delta), "delta");
  artifact["eta"] = finite_all(std::move(eta), "eta");
  artifact["cone_tags"] = tags;
  artifact["orthogonality_gap"] =
      finite(evi_derivative_orthogonality_gap(der.ptr), "gap");
  artifact["formulation_gap"] =
      finite(evi_derivative_formulation_gap(der.ptr), "gap");

  const std::string path = out_path(config, "derivative.json");
  write_text(path, artifact.dump(2) + "\n", opts.quiet);

  if (!t_list.empty()) {
    std::vector<double> errs(t_list.size());
    check(evi_fd_table(sys.ptr, f.ptr, g.ptr, t_list.data(),
                       static_cast<int>(t_list.size()), hadamard ? 1 : 0,
                       errs.data()),
          "derivative.t_list");
    std::ostringstream csv;
    csv << "t,err\n";
    for (size_t i = 0; i < t_list.size(); ++i)
      csv << fmt12(t_list[i]) << ',' << fmt12(finite(errs[i], "fd error"))
          << '\n';
    std::string fd_path = path == "-" ? "-" : path + ".fd.csv";
    if (config.contains("output") && config["output"].contains("fd_path"))
      fd_path = config["output"]["fd_path"].get<std::string>();
    write_text(fd_path, csv.str(), opts.quiet);
  }
  return 0;
}

std::vector<int> capacity_nodes(const System& sys, const Json& cap) {
  const Json& set = require(cap, "capacity", "set");
  if (set.is_array()) return set.get<std::vector<int>>();
  if (!set.is_string())
    throw ConfigError(
        "config error in capacity.set: expected a spec string or node array");
  const std::string spec = set.get<std::string>();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (colon == std::string::npos)
    throw ConfigError("config error in capacity.set: malformed '" + spec +
                      "'");
  std::istringstream args(spec.substr(colon + 1));
  if (kind == "point") {
    std::string sx, sy;
    std::getline(args, sx, ',');
    const double px = std::stod(sx);
    double py = 0.0;
    if (std::getline(args, sy, ',')) py = std::stod(sy);
    int node = -1;
    check(evi_system_nearest_node(sys.ptr, px, py, &node), "capacity.set");
    return {node};
  }
  if (kind == "interval") {
    std::string sa, sb;
    if (!std::getline(args, sa, ',') || !std::getline(args, sb, ','))
      throw ConfigError("config error in capacity.set: interval needs a,b");
    int count = 0;
    check(evi_system_nodes_in_interval(sys.ptr, std::stod(sa), std::stod(sb),
                                       nullptr, &count),
          "capacity.set");
    std::vector<int> nodes(count);
    check(evi_system_nodes_in_interval(sys.ptr, std::stod(sa), std::stod(sb),
                                       nodes.data(), &count),
          "capacity.set");
    return nodes;
  }
  throw ConfigError("config error in capacity.set: unknown kind '" + kind +
                    "'");
}

int cmd_capacity(const Json& config, const Options& opts) {
  require_keys(config, "config", {"mesh", "capacity", "output"});
  System sys = make_system(config);
  const Json& cap = require(config, "config", "capacity");
  require_keys(cap, "capacity", {"set"});
  std::vector<int> nodes = capacity_nodes(sys, cap);

  const int n = evi_system_interior_count(sys.ptr);
  double value = 0.0;
  std::vector<double> potential(n);
  check(evi_capacity(sys.ptr, nodes.data(), static_cast<int>(nodes.size()),
                     &value, potential.data()),
        "capacity");

  Json artifact;
  artifact["command"] = "capacity";
  artifact["mesh"] = mesh_block(config, sys);
  artifact["set"] = cap["set"];
  artifact["nodes"] = nodes;
  artifact["value"] = finite(value, "capacity value");
  artifact["coords"] = coords_block(sys);
  artifact["potential"] = finite_all(std::move(potential), "potential");

  write_text(out_path(config, "capacity.json"), artifact.dump(2) + "\n",
             opts.quiet);
  return 0;
}

int cmd_witness(const Json& config, const Options& opts) {
  require_keys(config, "config", {"witness", "output"});
  const Json& wit = require(config, "config", "witness");
  require_keys(wit, "witness", {"alignment", "n_list", "h_rule"});
  const std::string alignment =
      require(wit, "witness", "alignment").get<std::string>();
  const std::vector<int> n_list =
      require(wit, "witness", "n_list").get<std::vector<int>>();
  std::string h_rule = "decade";
  if (wit.contains("h_rule")) h_rule = wit["h_rule"].get<std::string>();
  if (n_list.empty())
    throw ConfigError("config error in witness.n_list: empty list");

  WitnessTable table;
  check(evi_witness_sweep(alignment.c_str(), n_list.data(),
                          static_cast<int>(n_list.size()), h_rule.c_str(),
                          &table.ptr),
        "config error in witness");

  std::ostringstream csv;
  csv << "alignment,h,n,d1,pairing,d2,z_supnorm,cap_node\n";
  for (int row = 0; row < evi_witness_table_rows(table.ptr); ++row) {
    double h, d1, pairing, d2, z_supnorm, cap_node;
    int n;
    check(evi_witness_table_row(table.ptr, row, &h, &n, &d1, &pairing, &d2,
                                &z_supnorm, &cap_node),
          "witness");
    csv << alignment << ',' << fmt12(finite(h, "h")) << ',' << n << ','
        << fmt12(finite(d1, "d1")) << ',' << fmt12(finite(pairing, "pairing"))
        << ',' << fmt12(finite(d2, "d2")) << ','
        << fmt12(finite(z_supnorm, "z_supnorm")) << ','
        << fmt12(finite(cap_node, "cap_node")) << '\n';
  }
  write_text(out_path(config, "witness.csv"), csv.str(), opts.quiet);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elliptic VI toolkit (solve | derivative | capacity | witness)"};
  app.require_subcommand(1);

  Options opts;
  app.add_option("--config", opts.config_path, "run configuration (JSON)");
  app.add_option("--out", opts.out_path, "output path (overrides config)");
  app.add_option("--set", opts.overrides,
                 "override a config entry, key.path=value (repeatable)");
  app.add_flag("--quiet", opts.quiet, "suppress progress output");

  auto* solve = app.add_subcommand("solve", "solve the VI, both routes");
  auto* derivative =
      app.add_subcommand("derivative", "directional derivative + FD table");
  auto* capacity = app.add_subcommand("capacity", "capacity of a node set");
  auto* witness =
      app.add_subcommand("witness", "dual-norm refinement study (CSV)");
  for (CLI::App* sub : {solve, derivative, capacity, witness})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    const Json config = load_config(opts);
    if (solve->parsed()) return cmd_solve(config, opts);
    if (derivative->parsed()) return cmd_derivative(config, opts);
    if (capacity->parsed()) return cmd_capacity(config, opts);
    if (witness->parsed()) return cmd_witness(config, opts);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
