#include "survens/deepsurv.hpp"

#include <cmath>

#include <json.hpp>

#include "survens/cox_partial.hpp"
#include "survens/errors.hpp"
#include "survens/rng.hpp"

namespace survens {

namespace {

bool use_relu(const std::string& activation) {
  if (activation == "relu") return true;
  if (activation == "tanh") return false;
  throw InvalidConfig("activation must be 'relu' or 'tanh'");
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, bool relu) {
  if (relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& z, bool relu) {
  if (relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

// Forward pass plus backprop of the mean Cox loss through every layer.
// masks may be empty (dropout off); otherwise one inverted-dropout mask
// per hidden layer, already scaled by 1/(1-q).
DeepSurvGrads loss_grad_impl(const DeepSurvModel& model,
                             const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& time,
                             const std::vector<int>& event,
                             double weight_decay,
                             const std::vector<Eigen::MatrixXd>& masks) {
  const int n = (int)x.rows();
  const int n_layers = (int)model.w.size();
  const bool relu = use_relu(model.activation);

  std::vector<Eigen::MatrixXd> acts(n_layers + 1), pre(n_layers);
  acts[0] = x;
  for (int l = 0; l < n_layers; ++l) {
    pre[l] = acts[l] * model.w[l].transpose();
    pre[l].rowwise() += model.b[l].transpose();
    if (l + 1 < n_layers) {
      acts[l + 1] = activate(pre[l], relu);
      if (!masks.empty()) acts[l + 1].array() *= masks[l].array();
    } else {
      acts[l + 1] = pre[l];  // linear output unit
    }
  }

  Eigen::VectorXd eta = acts[n_layers].col(0);
  CoxGradHess gh = cox_grad_hess(eta, time, event);

  DeepSurvGrads out;
  out.loss = gh.nll / n;
  out.dw.resize(n_layers);
  out.db.resize(n_layers);

  Eigen::MatrixXd delta = gh.grad / (double)n;  // n x 1
  for (int l = n_layers - 1; l >= 0; --l) {
    out.dw[l] = delta.transpose() * acts[l];
    out.db[l] = delta.colwise().sum().transpose();
    if (weight_decay > 0.0) {
      out.dw[l] += weight_decay * model.w[l];
      out.loss += 0.5 * weight_decay * model.w[l].squaredNorm();
    }
    if (l > 0) {
      delta = delta * model.w[l];
      if (!masks.empty()) delta.array() *= masks[l - 1].array();
      delta.array() *= activate_grad(pre[l - 1], relu).array();
    }
  }
  return out;
}

}  // namespace

DeepSurvGrads deepsurv_loss_grad(const DeepSurvModel& model,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& time,
                                 const std::vector<int>& event,
                                 double weight_decay) {
  return loss_grad_impl(model, x, time, event, weight_decay, {});
}

Eigen::VectorXd deepsurv_risk(const DeepSurvModel& model,
                              const Eigen::MatrixXd& x) {
  if ((int)x.cols() != model.n_features)
    throw FeatureMismatch("column count does not match network input");
  const bool relu = use_relu(model.activation);
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < model.w.size(); ++l) {
    Eigen::MatrixXd z = a * model.w[l].transpose();
    z.rowwise() += model.b[l].transpose();
    a = l + 1 < model.w.size() ? activate(z, relu) : z;
  }
  return a.col(0);
}

DeepSurvModel fit_deepsurv(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& time,
                           const std::vector<int>& event,
                           const MlpConfig& cfg) {
  const int n = (int)x.rows(), p = (int)x.cols();
  if ((int)time.size() != n || (int)event.size() != n)
    throw LengthMismatch("x, time, and event must agree on row count");
  const bool relu = use_relu(cfg.activation);
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw InvalidConfig("optimizer must be 'adam' or 'sgd'");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw InvalidConfig("dropout must lie in [0, 1)");
  if (cfg.learning_rate <= 0.0) throw InvalidConfig("learning_rate must be > 0");
  if (cfg.epochs < 1) throw InvalidConfig("epochs must be >= 1");
  for (int h : cfg.hidden)
    if (h < 1) throw InvalidConfig("hidden widths must be >= 1");

  DeepSurvModel model;
  model.activation = cfg.activation;
  model.n_features = p;

  std::vector<int> widths;
  widths.push_back(p);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(1);
  const int n_layers = (int)widths.size() - 1;

  Rng rng(cfg.seed);
  for (int l = 0; l < n_layers; ++l) {
    int fan_in = widths[l], fan_out = widths[l + 1];
    double limit = relu ? std::sqrt(6.0 / fan_in)
                        : std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
    model.w.push_back(std::move(w));
    model.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }

  std::vector<Eigen::MatrixXd> mw(n_layers), vw(n_layers);
  std::vector<Eigen::VectorXd> mb(n_layers), vb(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    mw[l].setZero(model.w[l].rows(), model.w[l].cols());
    vw[l] = mw[l];
    mb[l].setZero(model.b[l].size());
    vb[l] = mb[l];
  }

  auto check = [](double loss) {
    if (!std::isfinite(loss)) throw DivergedLoss("training loss is not finite");
  };

  model.loss_trace.push_back(
      deepsurv_loss_grad(model, x, time, event, cfg.weight_decay).loss);
  check(model.loss_trace.back());

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<Eigen::MatrixXd> masks;
    if (cfg.dropout > 0.0) {
      masks.resize(n_layers - 1);
      double keep = 1.0 - cfg.dropout;
      for (int l = 0; l + 1 < n_layers; ++l) {
        masks[l].resize(n, widths[l + 1]);
        for (int i = 0; i < n; ++i)
          for (int u = 0; u < widths[l + 1]; ++u)
            masks[l](i, u) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
    }
    DeepSurvGrads g =
        loss_grad_impl(model, x, time, event, cfg.weight_decay, masks);
    check(g.loss);

    if (cfg.clip_norm > 0.0) {
      double sq = 0.0;
      for (int l = 0; l < n_layers; ++l)
        sq += g.dw[l].squaredNorm() + g.db[l].squaredNorm();
      double norm = std::sqrt(sq);
      if (norm > cfg.clip_norm) {
        double s = cfg.clip_norm / norm;
        for (int l = 0; l < n_layers; ++l) {
          g.dw[l] *= s;
          g.db[l] *= s;
        }
      }
    }

    if (cfg.optimizer == "adam") {
      double c1 = 1.0 - std::pow(beta1, epoch);
      double c2 = 1.0 - std::pow(beta2, epoch);
      for (int l = 0; l < n_layers; ++l) {
        mw[l] = beta1 * mw[l] + (1.0 - beta1) * g.dw[l];
        vw[l] = beta2 * vw[l].array().matrix() +
                (1.0 - beta2) * g.dw[l].array().square().matrix();
        model.w[l].array() -=
            cfg.learning_rate * (mw[l].array() / c1) /
            ((vw[l].array() / c2).sqrt() + eps);
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * g.db[l];
        vb[l] = beta2 * vb[l].array().matrix() +
                (1.0 - beta2) * g.db[l].array().square().matrix();
        model.b[l].array() -=
            cfg.learning_rate * (mb[l].array() / c1) /
            ((vb[l].array() / c2).sqrt() + eps);
      }
    } else {
      for (int l = 0; l < n_layers; ++l) {
        mw[l] = cfg.momentum * mw[l] - cfg.learning_rate * g.dw[l];
        model.w[l] += mw[l];
        mb[l] = cfg.momentum * mb[l] - cfg.learning_rate * g.db[l];
        model.b[l] += mb[l];
      }
    }

    model.loss_trace.push_back(
        deepsurv_loss_grad(model, x, time, event, cfg.weight_decay).loss);
    check(model.loss_trace.back());
  }
  return model;
}

std::string deepsurv_to_json(const DeepSurvModel& model) {
  nlohmann::json j;
  j["kind"] = "deepsurv";
  j["activation"] = model.activation;
  j["n_features"] = model.n_features;
  j["loss_trace"] = model.loss_trace;
  nlohmann::json layers = nlohmann::json::array();
  for (size_t l = 0; l < model.w.size(); ++l) {
    nlohmann::json jl;
    jl["rows"] = model.w[l].rows();
    jl["cols"] = model.w[l].cols();
    std::vector<double> w(model.w[l].data(),
                          model.w[l].data() + model.w[l].size());
    jl["w"] = w;
    std::vector<double> b(model.b[l].data(),
                          model.b[l].data() + model.b[l].size());
    jl["b"] = b;
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

DeepSurvModel deepsurv_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "deepsurv")
    throw InvalidConfig("not a deepsurv model");
  DeepSurvModel model;
  model.activation = j.at("activation").get<std::string>();
  model.n_features = j.at("n_features").get<int>();
  model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  for (const auto& jl : j.at("layers")) {
    int rows = jl.at("rows").get<int>(), cols = jl.at("cols").get<int>();
    auto wv = jl.at("w").get<std::vector<double>>();
    auto bv = jl.at("b").get<std::vector<double>>();
    if ((int)wv.size() != rows * cols || (int)bv.size() != rows)
      throw InvalidConfig("layer shape mismatch in model file");
    model.w.push_back(Eigen::Map<Eigen::MatrixXd>(wv.data(), rows, cols));
    model.b.push_back(Eigen::Map<Eigen::VectorXd>(bv.data(), rows));
  }
  return model;
}

}  // namespace survens
