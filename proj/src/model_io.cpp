#include "dsoft/model_io.hpp"

#include <stdexcept>
#include <string>

#include "dsoft/fsio.hpp"

namespace dsoft {

using nlohmann::json;

namespace {

const char* criterion_name(Criterion c) {
  return c == Criterion::AIC ? "AIC" : "BIC";
}
Criterion criterion_from(const std::string& s) {
  if (s == "AIC") return Criterion::AIC;
  if (s == "BIC") return Criterion::BIC;
  throw std::invalid_argument("model file: unknown criterion " + s);
}

const char* growth_name(GrowthMode g) {
  return g == GrowthMode::per_param ? "per_param" : "best_param";
}
GrowthMode growth_from(const std::string& s) {
  if (s == "per_param") return GrowthMode::per_param;
  if (s == "best_param") return GrowthMode::best_param;
  throw std::invalid_argument("model file: unknown growth mode " + s);
}

const char* refine_name(RefineMode r) {
  return r == RefineMode::all ? "all" : "new_only";
}
RefineMode refine_from(const std::string& s) {
  if (s == "all") return RefineMode::all;
  if (s == "new_only") return RefineMode::new_only;
  throw std::invalid_argument("model file: unknown refine mode " + s);
}

json config_to_json(const FitConfig& cfg) {
  return json{{"criterion", criterion_name(cfg.criterion)},
              {"max_nodes", cfg.max_nodes},
              {"candidate_restarts", cfg.candidate_restarts},
              {"candidate_cycles", cfg.candidate_cycles},
              {"max_outer_iters", cfg.max_outer_iters},
              {"growth", growth_name(cfg.growth)},
              {"refine", refine_name(cfg.refine)},
              {"shrinkage",
               json{{"lambda", cfg.shrinkage.lambda},
                    {"ridge_zeta", cfg.shrinkage.ridge_zeta},
                    {"max_inner_iters", cfg.shrinkage.max_inner_iters},
                    {"grad_tol", cfg.shrinkage.grad_tol},
                    {"penalize_bias", cfg.shrinkage.penalize_bias}}}};
}

FitConfig config_from_json(const json& j) {
  FitConfig cfg;
  cfg.criterion = criterion_from(j.at("criterion").get<std::string>());
  cfg.max_nodes = j.at("max_nodes").get<int>();
  cfg.candidate_restarts = j.at("candidate_restarts").get<int>();
  cfg.candidate_cycles = j.at("candidate_cycles").get<int>();
  cfg.max_outer_iters = j.at("max_outer_iters").get<int>();
  cfg.growth = growth_from(j.at("growth").get<std::string>());
  cfg.refine = refine_from(j.at("refine").get<std::string>());
  const json& s = j.at("shrinkage");
  cfg.shrinkage.lambda = s.at("lambda").get<std::vector<double>>();
  cfg.shrinkage.ridge_zeta = s.at("ridge_zeta").get<double>();
  cfg.shrinkage.max_inner_iters = s.at("max_inner_iters").get<int>();
  cfg.shrinkage.grad_tol = s.at("grad_tol").get<double>();
  cfg.shrinkage.penalize_bias = s.at("penalize_bias").get<bool>();
  return cfg;
}

json report_to_json(const FitReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back(json{{"iteration", s.iteration},
                         {"param", s.param},
                         {"action", s.action},
                         {"node", s.node},
                         {"gain", s.gain},
                         {"loglik", s.loglik},
                         {"df", s.df},
                         {"criterion", s.criterion}});
  return json{{"steps", std::move(steps)},
              {"criterion_trace", r.criterion_trace},
              {"loglik_trace", r.loglik_trace},
              {"final_loglik", r.final_loglik},
              {"final_df", r.final_df},
              {"final_criterion", r.final_criterion},
              {"criterion_name", r.criterion_name},
              {"n_train", r.n_train},
              {"stop_reason", r.stop_reason},
              {"warning", r.warning}};
}

FitReport report_from_json(const json& j) {
  FitReport r;
  for (const json& s : j.at("steps")) {
    FitStep step;
    step.iteration = s.at("iteration").get<int>();
    step.param = s.at("param").get<int>();
    step.action = s.at("action").get<std::string>();
    step.node = s.at("node").get<int>();
    step.gain = s.at("gain").get<double>();
    step.loglik = s.at("loglik").get<double>();
    step.df = s.at("df").get<int>();
    step.criterion = s.at("criterion").get<double>();
    r.steps.push_back(std::move(step));
  }
  r.criterion_trace = j.at("criterion_trace").get<std::vector<double>>();
  r.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
  r.final_loglik = j.at("final_loglik").get<double>();
  r.final_df = j.at("final_df").get<int>();
  r.final_criterion = j.at("final_criterion").get<double>();
  r.criterion_name = j.at("criterion_name").get<std::string>();
  r.n_train = j.at("n_train").get<std::size_t>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.warning = j.at("warning").get<std::string>();
  return r;
}

json tree_to_json(const SoftTree& tree) {
  json nodes = json::array();
  for (int id = 0; id < tree.topo.n_nodes(); ++id) {
    const auto& nd = tree.topo.nodes[static_cast<std::size_t>(id)];
    const char* side =
        nd.parent < 0 ? "root" : (tree.topo.is_left_child(id) ? "L" : "R");
    nodes.push_back(
        json{{"id", id},
             {"parent", nd.parent},
             {"side", side},
             {"omega", tree.gates[static_cast<std::size_t>(id)].omega}});
  }
  return json{{"nodes", std::move(nodes)}, {"beta", tree.beta}};
}

SoftTree tree_from_json(const json& j) {
  SoftTree tree;
  const json& nodes = j.at("nodes");
  if (nodes.empty()) throw std::invalid_argument("model file: empty tree");
  tree.gates.resize(nodes.size());
  for (const json& nd : nodes) {
    const int id = nd.at("id").get<int>();
    const int parent = nd.at("parent").get<int>();
    const std::string side = nd.at("side").get<std::string>();
    if (side == "L") {
      const int left = tree.topo.add_children(parent);
      if (left != id)
        throw std::invalid_argument("model file: tree nodes out of order");
    } else if (side == "R") {
      if (tree.topo.nodes[static_cast<std::size_t>(parent)].right != id)
        throw std::invalid_argument("model file: tree nodes out of order");
    } else if (id != 0) {
      throw std::invalid_argument("model file: unknown node side " + side);
    }
    tree.gates[static_cast<std::size_t>(id)].omega =
        nd.at("omega").get<std::vector<double>>();
  }
  tree.beta = j.at("beta").get<std::vector<double>>();
  if (tree.beta.size() != static_cast<std::size_t>(tree.topo.n_nodes()))
    throw std::invalid_argument("model file: beta/node count mismatch");
  for (int id = 0; id < tree.topo.n_nodes(); ++id) {
    const bool has_gate = !tree.gates[static_cast<std::size_t>(id)].empty();
    if (has_gate == tree.topo.is_leaf(id))
      throw std::invalid_argument(
          "model file: gate placement inconsistent with topology");
  }
  return tree;
}

}  // namespace

json model_to_json(const DistModel& model) {
  json links = json::array();
  for (int k = 0; k < model.family.n_params(); ++k)
    links.push_back(std::string(model.family.link(k).name()));
  json trees = json::array();
  for (const auto& t : model.trees) trees.push_back(tree_to_json(t));
  return json{{"version", kModelSchemaVersion},
              {"kind", "tree"},
              {"family", std::string(model.family.name())},
              {"links", std::move(links)},
              {"standardization", json{{"mean", model.standardizer.mean},
                                       {"sd", model.standardizer.sd}}},
              {"trees", std::move(trees)},
              {"fixed_params", model.fixed_eta},
              {"fit_report", report_to_json(model.report)},
              {"seed", model.seed},
              {"config", config_to_json(model.config)}};
}

DistModel model_from_json(const json& j) {
  if (j.at("version").get<int>() != kModelSchemaVersion)
    throw std::invalid_argument("model file: unsupported schema version");
  if (j.at("kind").get<std::string>() != "tree")
    throw std::invalid_argument("model file: not a single-tree model");
  DistModel m;
  m.family = Family::from_code(j.at("family").get<std::string>());
  const auto links = j.at("links").get<std::vector<std::string>>();
  if (static_cast<int>(links.size()) != m.family.n_params())
    throw std::invalid_argument("model file: link count mismatch");
  for (int k = 0; k < m.family.n_params(); ++k)
    if (links[static_cast<std::size_t>(k)] != m.family.link(k).name())
      throw std::invalid_argument("model file: link mismatch for parameter " +
                                  std::string(m.family.param_name(k)));
  const json& st = j.at("standardization");
  m.standardizer.mean = st.at("mean").get<std::vector<double>>();
  m.standardizer.sd = st.at("sd").get<std::vector<double>>();
  m.trees.clear();
  for (const json& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  if (static_cast<int>(m.trees.size()) != m.family.n_tree_params())
    throw std::invalid_argument("model file: tree count mismatch");
  m.fixed_eta = j.at("fixed_params").get<std::vector<double>>();
  if (static_cast<int>(m.fixed_eta.size()) !=
      m.family.n_params() - m.family.n_tree_params())
    throw std::invalid_argument("model file: fixed parameter count mismatch");
  m.report = report_from_json(j.at("fit_report"));
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = config_from_json(j.at("config"));
  return m;
}

json forest_to_json(const ForestModel& forest) {
  json members = json::array();
  for (const auto& m : forest.members) members.push_back(model_to_json(m));
  return json{{"version", kModelSchemaVersion},
              {"kind", "forest"},
              {"n_trees", forest.n_trees},
              {"bag_fraction", forest.bag_fraction},
              {"seed", forest.seed},
              {"members", std::move(members)}};
}

ForestModel forest_from_json(const json& j) {
  if (j.at("version").get<int>() != kModelSchemaVersion)
    throw std::invalid_argument("model file: unsupported schema version");
  if (j.at("kind").get<std::string>() != "forest")
    throw std::invalid_argument("model file: not a forest model");
  ForestModel f;
  f.n_trees = j.at("n_trees").get<int>();
  f.bag_fraction = j.at("bag_fraction").get<double>();
  f.seed = j.at("seed").get<std::uint64_t>();
  for (const json& m : j.at("members"))
    f.members.push_back(model_from_json(m));
  if (f.members.empty() ||
      static_cast<int>(f.members.size()) != f.n_trees)
    throw std::invalid_argument("model file: member count mismatch");
  const auto& fam = f.members.front().family;
  for (const auto& m : f.members)
    if (m.family.code() != fam.code() ||
        m.standardizer.mean.size() !=
            f.members.front().standardizer.mean.size())
      throw std::invalid_argument(
          "model file: forest members disagree on family or feature layout");
  return f;
}

void save_model(const DistModel& model, const std::string& path) {
  write_text_atomic(path, model_to_json(model).dump(2) + "\n");
}

void save_forest(const ForestModel& forest, const std::string& path) {
  write_text_atomic(path, forest_to_json(forest).dump(2) + "\n");
}

bool is_forest_file(const json& j) {
  return j.contains("kind") && j.at("kind").get<std::string>() == "forest";
}

nlohmann::json load_model_json(const std::string& path) {
  return json::parse(read_text_file(path));
}

DistModel load_model(const std::string& path) {
  return model_from_json(load_model_json(path));
}

ForestModel load_forest(const std::string& path) {
  return forest_from_json(load_model_json(path));
}

}  // namespace dsoft
