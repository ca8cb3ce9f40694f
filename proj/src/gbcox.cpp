#include "survens/gbcox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "survens/cox_partial.hpp"
#include "survens/errors.hpp"

namespace survens {

namespace {

struct BoostContext {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& g;
  const Eigen::VectorXd& h;
  const GbcoxConfig& cfg;
};

double leaf_weight(double gsum, double hsum, double lambda) {
  double denom = hsum + lambda;
  return denom > 0.0 ? -gsum / denom : 0.0;
}

double score_term(double gsum, double hsum, double lambda) {
  double denom = hsum + lambda;
  return denom > 0.0 ? gsum * gsum / denom : 0.0;
}

void grow(GbTree& tree, int node_ix, std::vector<int> rows, int depth,
          const BoostContext& ctx) {
  double gsum = 0.0, hsum = 0.0;
  for (int i : rows) {
    gsum += ctx.g[i];
    hsum += ctx.h[i];
  }

  double best_gain = 0.0, best_thr = 0.0;
  int best_feat = -1;
  if (depth < ctx.cfg.max_depth && rows.size() > 1) {
    double parent = score_term(gsum, hsum, ctx.cfg.lambda);
    std::vector<int> order(rows.size());
    for (int f = 0; f < ctx.x.cols(); ++f) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return ctx.x(rows[a], f) < ctx.x(rows[b], f);
      });
      double gl = 0.0, hl = 0.0;
      for (size_t k = 0; k + 1 < order.size(); ++k) {
        int i = rows[order[k]];
        gl += ctx.g[i];
        hl += ctx.h[i];
        double v = ctx.x(i, f);
        double v_next = ctx.x(rows[order[k + 1]], f);
        if (v == v_next) continue;
        double gain = 0.5 * (score_term(gl, hl, ctx.cfg.lambda) +
                             score_term(gsum - gl, hsum - hl, ctx.cfg.lambda) -
                             parent) -
                      ctx.cfg.gamma;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = f;
          best_thr = 0.5 * (v + v_next);
        }
      }
    }
  }

  if (best_feat < 0) {
    tree.nodes[node_ix].weight = leaf_weight(gsum, hsum, ctx.cfg.lambda);
    return;
  }

  std::vector<int> left_rows, right_rows;
  for (int i : rows)
    (ctx.x(i, best_feat) <= best_thr ? left_rows : right_rows).push_back(i);
  rows.clear();
  rows.shrink_to_fit();

  int left_ix = (int)tree.nodes.size();
  tree.nodes.emplace_back();
  int right_ix = (int)tree.nodes.size();
  tree.nodes.emplace_back();
  GbNode& node = tree.nodes[node_ix];
  node.feature = best_feat;
  node.threshold = best_thr;
  node.left = left_ix;
  node.right = right_ix;
  grow(tree, left_ix, std::move(left_rows), depth + 1, ctx);
  grow(tree, right_ix, std::move(right_rows), depth + 1, ctx);
}

double tree_value(const GbTree& tree, const Eigen::MatrixXd& x, int row) {
  int ix = 0;
  while (tree.nodes[ix].feature >= 0) {
    const GbNode& node = tree.nodes[ix];
    ix = x(row, node.feature) <= node.threshold ? node.left : node.right;
  }
  return tree.nodes[ix].weight;
}

}  // namespace

GbcoxModel fit_gbcox(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                     const std::vector<int>& event, const GbcoxConfig& cfg) {
  const int n = (int)x.rows();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("x, time, and event must agree on row count");
  if (cfg.n_rounds < 1) throw InvalidConfig("n_rounds must be >= 1");
  if (cfg.max_depth < 1) throw InvalidConfig("max_depth must be >= 1");
  if (cfg.learning_rate <= 0.0) throw InvalidConfig("learning_rate must be > 0");
  if (cfg.lambda < 0.0 || cfg.gamma < 0.0)
    throw InvalidConfig("lambda and gamma must be >= 0");

  GbcoxModel model;
  model.n_features = (int)x.cols();
  model.learning_rate = cfg.learning_rate;

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  std::vector<int> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);

  CoxGradHess gh = cox_grad_hess(eta, time, event);
  model.nll_trace.push_back(gh.nll);
  for (int round = 0; round < cfg.n_rounds; ++round) {
    BoostContext ctx{x, gh.grad, gh.hess, cfg};
    GbTree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, all_rows, 0, ctx);
    for (int i = 0; i < n; ++i)
      eta[i] += cfg.learning_rate * tree_value(tree, x, i);
    model.trees.push_back(std::move(tree));
    gh = cox_grad_hess(eta, time, event);
    model.nll_trace.push_back(gh.nll);
  }
  return model;
}

Eigen::VectorXd gbcox_risk(const GbcoxModel& model, const Eigen::MatrixXd& x) {
  if ((int)x.cols() != model.n_features)
    throw FeatureMismatch("column count does not match booster");
  Eigen::VectorXd risk = Eigen::VectorXd::Zero(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (const GbTree& tree : model.trees) acc += tree_value(tree, x, i);
    risk[i] = model.learning_rate * acc;
  }
  return risk;
}

std::string gbcox_to_json(const GbcoxModel& model) {
  nlohmann::json j;
  j["kind"] = "gbcox";
  j["n_features"] = model.n_features;
  j["learning_rate"] = model.learning_rate;
  j["nll_trace"] = model.nll_trace;
  nlohmann::json trees = nlohmann::json::array();
  for (const GbTree& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const GbNode& n : tree.nodes) {
      nlohmann::json jn;
      jn["feature"] = n.feature;
      if (n.feature >= 0) {
        jn["threshold"] = n.threshold;
        jn["left"] = n.left;
        jn["right"] = n.right;
      } else {
        jn["weight"] = n.weight;
      }
      nodes.push_back(std::move(jn));
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

GbcoxModel gbcox_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "gbcox") throw InvalidConfig("not a gbcox model");
  GbcoxModel model;
  model.n_features = j.at("n_features").get<int>();
  model.learning_rate = j.at("learning_rate").get<double>();
  model.nll_trace = j.at("nll_trace").get<std::vector<double>>();
  for (const auto& jt : j.at("trees")) {
    GbTree tree;
    for (const auto& jn : jt) {
      GbNode n;
      n.feature = jn.at("feature").get<int>();
      if (n.feature >= 0) {
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
      } else {
        n.weight = jn.at("weight").get<double>();
      }
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace survens
