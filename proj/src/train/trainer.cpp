#include "varsig/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "varsig/baselines/deterministic.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/parallel.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/model/forward_op.hpp"
#include "varsig/physics/fresnel.hpp"

namespace varsig {

namespace {

struct Moments {
  double mean = 0.0, std = 1.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  long double s = 0, s2 = 0;
  for (double x : v) s += x;
  m.mean = static_cast<double>(s / v.size());
  for (double x : v) s2 += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(static_cast<double>(s2 / v.size()));
  if (!(m.std > 0.0)) m.std = 1.0;
  return m;
}

void check_dataset(const Dataset& ds, const ForwardModel& fm) {
  if (ds.size() == 0) throw ConfigError("training set is empty");
  if (ds.system != fm.system()) {
    throw SystemMismatchError("dataset system " + std::string(to_string(ds.system)) +
                              " does not match forward model " + std::string(to_string(fm.system())));
  }
  if (config_hash(ds.physics) != config_hash(fm.config_json())) {
    throw SystemMismatchError("dataset physics config differs from the forward model's");
  }
  const auto& r = ds.records.front();
  if (r.f.shape() != fm.signal_shape() || r.g.shape() != fm.measurement_shape()) {
    throw SystemMismatchError("dataset record shapes do not match the forward model");
  }
}

torch::Tensor stack(const Dataset& ds, bool signal, torch::Dtype dtype) {
  const std::size_t n = signal ? ds.records.front().f.flat_len() : ds.records.front().g.flat_len();
  torch::Tensor t = torch::empty({static_cast<std::int64_t>(ds.size()), static_cast<std::int64_t>(n)},
                                 torch::kDouble);
  double* p = t.data_ptr<double>();
  for (const auto& r : ds.records) {
    const auto v = signal ? r.f.data() : r.g.data();
    std::copy(v.begin(), v.end(), p);
    p += n;
  }
  return t.to(dtype);
}

double mean_of(const torch::Tensor& t) { return t.detach().to(torch::kDouble).mean().item<double>(); }
double sum_of(const torch::Tensor& t) { return t.detach().to(torch::kDouble).sum().item<double>(); }

}  // namespace

NormStats compute_stats(Method method, const Dataset& ds, const ForwardModel& fm) {
  std::vector<double> rep, g, f;
  for (const auto& r : ds.records) {
    g.insert(g.end(), r.g.data().begin(), r.g.data().end());
    f.insert(f.end(), r.f.data().begin(), r.f.data().end());
  }
  if (method == Method::physics_informed) {
    const auto* holo = dynamic_cast<const HologramModel*>(&fm);
    if (!holo) throw UnsupportedModelError("the physics-informed network is defined for holograms only");
    for (const auto& r : ds.records) {
      const auto bp = holo->back_propagate_sqrt(r.g.data(), true);
      rep.insert(rep.end(), bp.begin(), bp.end());
    }
  }
  const Moments mg = moments(g), mf = moments(f);
  const Moments mr = method == Method::physics_informed ? moments(rep) : mg;
  NormStats s;
  s.input_mean = mr.mean;
  s.input_std = mr.std;
  s.g_scale = mg.std;
  s.f_scale = mf.std;
  return s;
}

std::shared_ptr<RetrievalModel> train(Method method, const ModelConfig& cfg, const Dataset& ds,
                                      ForwardModelPtr fm, const TrainOptions& opt) {
  if (!fm) throw ConfigError("train needs a forward model");
  check_dataset(ds, *fm);
  ModelConfig c = cfg;
  if (opt.deterministic) c.dtype = "float64";
  auto model = std::make_shared<RetrievalModel>(method, c, fm, compute_stats(method, ds, *fm));
  continue_training(*model, ds, opt);
  return model;
}

void continue_training(RetrievalModel& model, const Dataset& ds, const TrainOptions& opt) {
  const ForwardModel& fm = model.forward_model();
  check_dataset(ds, fm);
  const ModelConfig& cfg = model.config();
  torch::set_num_threads(opt.deterministic ? 1 : max_threads());
  if (!model.optimizer) {
    model.optimizer = std::make_shared<torch::optim::Adam>(model.net()->parameters(),
                                                           torch::optim::AdamOptions(cfg.learning_rate));
  }
  model.net()->train();
  const torch::Tensor all_f = stack(ds, true, model.dtype());
  const torch::Tensor all_g = stack(ds, false, model.dtype());
  const std::size_t n = ds.size();
  const std::size_t bs = std::min(cfg.batch_size, n);
  const bool variational = model.method() == Method::variational;
  const auto steps = model.recurrences();
  const auto m = model.net()->latent_dim();

  for (std::size_t epoch = model.curve.size() + 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(derive_seed(cfg.seed, 0x73687566, epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochStats es;
    es.epoch = epoch;
    for (std::size_t start = 0, batch = 0; start < n; start += bs, ++batch) {
      const std::size_t count = std::min(bs, n - start);
      const torch::Tensor idx = torch::tensor(
          std::vector<std::int64_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(start + count)),
          torch::kLong);
      const torch::Tensor f = all_f.index_select(0, idx), g = all_g.index_select(0, idx);
      const auto b = static_cast<std::int64_t>(count);
      torch::Tensor loss;
      double elbo = 0, cons = 0, kl = 0, recon = 0, misfit = 0;
      if (variational) {
        const torch::Tensor qn = draw_noise(cfg.samples, steps, b, m, derive_seed(cfg.seed, epoch, 2 * batch), model.options());
        const torch::Tensor pn = draw_noise(cfg.samples, steps, b, m, derive_seed(cfg.seed, epoch, 2 * batch + 1), model.options());
        const HybridTerms h = hybrid_terms(model, fm, f, g, qn, pn);
        loss = -h.hybrid.mean();
        elbo = sum_of(h.elbo);
        cons = sum_of(h.consistency);
        kl = sum_of(h.kl);
        recon = sum_of(h.recon);
        misfit = sum_of(h.misfit);
      } else {
        const torch::Tensor fh = deterministic_batch(model, g);
        const torch::Tensor sq = (fh - f).pow(2);
        loss = sq.mean();
        recon = sum_of(sq.sum(1));
      }
      const double lv = loss.item<double>();
      if (!std::isfinite(lv)) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "non-finite loss at epoch %zu, batch %zu (elbo=%g consistency=%g kl=%g recon=%g misfit=%g)",
                      epoch, batch, elbo / b, cons / b, kl / b, recon / b, misfit / b);
        throw NumericalError(buf);
      }
      model.optimizer->zero_grad();
      loss.backward();
      model.optimizer->step();
      es.loss += lv * static_cast<double>(count);
      es.elbo += elbo;
      es.consistency += cons;
      es.kl += kl;
      es.recon += recon;
      es.misfit += misfit;
    }
    const double dn = static_cast<double>(n);
    es.loss /= dn;
    es.elbo /= dn;
    es.consistency /= dn;
    es.kl /= dn;
    es.recon /= dn;
    es.misfit /= dn;
    es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    model.curve.push_back(es);
    if (opt.on_epoch) opt.on_epoch(es);
  }
  model.net()->eval();
}

std::string loss_curve_csv(const std::vector<EpochStats>& curve, const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  out += "epoch,loss,elbo,consistency,kl,recon,misfit\n";
  char buf[512];
  for (const auto& e : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.loss, e.elbo,
                  e.consistency, e.kl, e.recon, e.misfit);
    out += buf;
  }
  return out;
}

}  // namespace varsig
