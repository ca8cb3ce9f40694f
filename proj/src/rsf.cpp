#include "survens/rsf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "survens/errors.hpp"
#include "survens/parallel.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

struct TreeContext {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& time;
  const std::vector<int>& event;
  const RsfConfig& cfg;
  int mtry;
  Rng rng;
};

// Two-group log-rank chi-square over the node's bootstrap members.
// Symmetric in the group labels, so swapping children leaves it unchanged.
double log_rank_stat(const std::vector<int>& rows, const TreeContext& ctx,
                     const std::vector<char>& in_left) {
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ctx.time[rows[a]] < ctx.time[rows[b]];
  });
  double u = 0.0, v = 0.0;
  size_t k = 0;
  double n_at_risk = (double)rows.size();
  double nl_at_risk = 0.0;
  for (char g : in_left) nl_at_risk += g ? 1.0 : 0.0;
  while (k < order.size()) {
    size_t k2 = k;
    double t = ctx.time[rows[order[k]]];
    double d = 0.0, dl = 0.0, leaving = 0.0, leaving_l = 0.0;
    while (k2 < order.size() && ctx.time[rows[order[k2]]] == t) {
      int m = order[k2];
      if (ctx.event[rows[m]]) {
        d += 1.0;
        dl += in_left[m] ? 1.0 : 0.0;
      }
      leaving += 1.0;
      leaving_l += in_left[m] ? 1.0 : 0.0;
      ++k2;
    }
    if (d > 0.0 && n_at_risk > 1.0) {
      double frac = nl_at_risk / n_at_risk;
      u += dl - d * frac;
      v += d * frac * (1.0 - frac) * (n_at_risk - d) / (n_at_risk - 1.0);
    }
    n_at_risk -= leaving;
    nl_at_risk -= leaving_l;
    k = k2;
  }
  return v > 0.0 ? u * u / v : 0.0;
}

void make_leaf(RsfNode& node, const std::vector<int>& rows,
               const TreeContext& ctx) {
  std::vector<int> order = rows;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return ctx.time[a] < ctx.time[b]; });
  double at_risk = (double)order.size();
  double chf = 0.0;
  size_t k = 0;
  while (k < order.size()) {
    size_t k2 = k;
    double t = ctx.time[order[k]];
    double d = 0.0, leaving = 0.0;
    while (k2 < order.size() && ctx.time[order[k2]] == t) {
      d += ctx.event[order[k2]] ? 1.0 : 0.0;
      leaving += 1.0;
      ++k2;
    }
    if (d > 0.0) {
      chf += d / at_risk;
      node.chf_time.push_back(t);
      node.chf_value.push_back(chf);
    }
    at_risk -= leaving;
    k = k2;
  }
}

void grow_node(RsfTree& tree, int node_ix, std::vector<int> rows,
               TreeContext& ctx) {
  int n_events = 0;
  for (int i : rows) n_events += ctx.event[i];
  if (n_events < 2 * ctx.cfg.min_node_events) {
    make_leaf(tree.nodes[node_ix], rows, ctx);
    return;
  }

  // Sample mtry features without replacement.
  const int p = (int)ctx.x.cols();
  std::vector<int> feats(p);
  std::iota(feats.begin(), feats.end(), 0);
  for (int k = 0; k < ctx.mtry; ++k)
    std::swap(feats[k], feats[k + ctx.rng.uniform_int(p - k)]);
  feats.resize(ctx.mtry);

  double best_stat = 0.0, best_thr = 0.0;
  int best_feat = -1;
  std::vector<char> in_left(rows.size());
  for (int f : feats) {
    std::vector<double> vals;
    vals.reserve(rows.size());
    for (int i : rows) vals.push_back(ctx.x(i, f));
    std::vector<double> uniq = vals;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2) continue;
    std::vector<double> mids;
    mids.reserve(uniq.size() - 1);
    for (size_t k = 0; k + 1 < uniq.size(); ++k)
      mids.push_back(0.5 * (uniq[k] + uniq[k + 1]));
    if ((int)mids.size() > ctx.cfg.max_candidates) {
      for (int k = 0; k < ctx.cfg.max_candidates; ++k)
        std::swap(mids[k], mids[k + ctx.rng.uniform_int((int)mids.size() - k)]);
      mids.resize(ctx.cfg.max_candidates);
      std::sort(mids.begin(), mids.end());
    }
    for (double thr : mids) {
      int ev_left = 0, ev_right = 0;
      for (size_t m = 0; m < rows.size(); ++m) {
        in_left[m] = vals[m] <= thr;
        if (ctx.event[rows[m]]) (in_left[m] ? ev_left : ev_right)++;
      }
      if (ev_left < ctx.cfg.min_node_events || ev_right < ctx.cfg.min_node_events)
        continue;
      double stat = log_rank_stat(rows, ctx, in_left);
      if (stat > best_stat) {
        best_stat = stat;
        best_feat = f;
        best_thr = thr;
      }
    }
  }

  if (best_feat < 0) {
    make_leaf(tree.nodes[node_ix], rows, ctx);
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
  RsfNode& node = tree.nodes[node_ix];
  node.feature = best_feat;
  node.threshold = best_thr;
  node.left = left_ix;
  node.right = right_ix;
  grow_node(tree, left_ix, std::move(left_rows), ctx);
  grow_node(tree, right_ix, std::move(right_rows), ctx);
}

}  // namespace

RsfModel fit_rsf(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                 const std::vector<int>& event, const RsfConfig& cfg) {
  const int n = (int)x.rows(), p = (int)x.cols();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("x, time, and event must agree on row count");
  if (cfg.n_trees < 1) throw InvalidConfig("n_trees must be >= 1");
  if (cfg.min_node_events < 1) throw InvalidConfig("min_node_events must be >= 1");
  int n_events = 0;
  for (int e : event) n_events += e;
  if (n_events == 0) throw NoEvents("no events in training data");

  RsfModel model;
  model.n_features = p;
  model.t_max = 0.0;
  for (int i = 0; i < n; ++i)
    if (event[i]) model.t_max = std::max(model.t_max, time[i]);
  model.trees.resize(cfg.n_trees);

  int mtry = cfg.mtry > 0 ? std::min(cfg.mtry, p)
                          : (int)std::ceil(std::sqrt((double)p));
  std::vector<double> oob_fraction(cfg.n_trees, 0.0);

  parallel_for(cfg.n_trees, cfg.jobs, [&](int t) {
    TreeContext ctx{x, time, event, cfg, mtry,
                    Rng(derive_seed(cfg.seed, "tree_" + std::to_string(t)))};
    std::vector<int> rows(n);
    std::vector<char> seen(n, 0);
    for (int i = 0; i < n; ++i) {
      rows[i] = ctx.rng.uniform_int(n);
      seen[rows[i]] = 1;
    }
    int n_oob = n - (int)std::count(seen.begin(), seen.end(), (char)1);
    oob_fraction[t] = (double)n_oob / (double)n;
    model.trees[t].nodes.emplace_back();
    grow_node(model.trees[t], 0, std::move(rows), ctx);
  });

  model.mean_oob_fraction =
      std::accumulate(oob_fraction.begin(), oob_fraction.end(), 0.0) /
      (double)cfg.n_trees;
  return model;
}

double rsf_tree_chf(const RsfTree& tree, const Eigen::VectorXd& x, double t) {
  int ix = 0;
  while (tree.nodes[ix].feature >= 0) {
    const RsfNode& node = tree.nodes[ix];
    ix = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  const RsfNode& leaf = tree.nodes[ix];
  double chf = 0.0;
  for (size_t k = 0; k < leaf.chf_time.size() && leaf.chf_time[k] <= t; ++k)
    chf = leaf.chf_value[k];
  return chf;
}

Eigen::VectorXd rsf_risk(const RsfModel& model, const Eigen::MatrixXd& x) {
  if ((int)x.cols() != model.n_features)
    throw FeatureMismatch("column count does not match forest");
  Eigen::VectorXd risk = Eigen::VectorXd::Zero(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd row = x.row(i);
    double acc = 0.0;
    for (const RsfTree& tree : model.trees)
      acc += rsf_tree_chf(tree, row, model.t_max);
    risk[i] = acc / (double)model.trees.size();
  }
  return risk;
}

std::string rsf_to_json(const RsfModel& model) {
  nlohmann::json j;
  j["kind"] = "rsf";
  j["n_features"] = model.n_features;
  j["t_max"] = model.t_max;
  j["mean_oob_fraction"] = model.mean_oob_fraction;
  nlohmann::json trees = nlohmann::json::array();
  for (const RsfTree& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const RsfNode& n : tree.nodes) {
      nlohmann::json jn;
      jn["feature"] = n.feature;
      if (n.feature >= 0) {
        jn["threshold"] = n.threshold;
        jn["left"] = n.left;
        jn["right"] = n.right;
      } else {
        jn["chf_time"] = n.chf_time;
        jn["chf_value"] = n.chf_value;
      }
      nodes.push_back(std::move(jn));
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

RsfModel rsf_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "rsf") throw InvalidConfig("not an rsf model");
  RsfModel model;
  model.n_features = j.at("n_features").get<int>();
  model.t_max = j.at("t_max").get<double>();
  model.mean_oob_fraction = j.at("mean_oob_fraction").get<double>();
  for (const auto& jt : j.at("trees")) {
    RsfTree tree;
    for (const auto& jn : jt) {
      RsfNode n;
      n.feature = jn.at("feature").get<int>();
      if (n.feature >= 0) {
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
      } else {
        n.chf_time = jn.at("chf_time").get<std::vector<double>>();
        n.chf_value = jn.at("chf_value").get<std::vector<double>>();
      }
      tree.nodes.push_back(std::move(n));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace survens
