// Copyright (c) 2026 The xconv Authors
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

// Acceptance suite. Prints one PASS/FAIL line per criterion. The exit code
// counts failed criteria, minus those named with --expect-fail (a FAIL line
// is still printed for them).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/geometry_oracles.hpp"
#include "support/gradcheck.hpp"
#include "xconv/config.hpp"
#include "xconv/dataset.hpp"
#include "xconv/errors.hpp"
#include "xconv/trainer.hpp"
#include "xconv/xconv.hpp"

using namespace xconv;
using ad::Mode;
using ad::Var;
using xconv::testing::grad_check;
using xconv::testing::random_projection;
using xconv::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets, one place.
constexpr double kGradStep = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradMinCases = 100;
constexpr double kGradSeconds = 60.0;
constexpr std::size_t kGeoInstances = 200;
constexpr std::size_t kGeoMaxPoints = 1024;
constexpr double kGeoSeconds = 30.0;
constexpr double kIdentityTol = 1e-12;
constexpr double kTranslationTol = 1e-9;
constexpr double kPermutationTol = 1e-9;
constexpr std::size_t kReductionTrials = 20;
constexpr double kShapeAccuracy = 0.95;
constexpr double kShapeSeconds = 600.0;
constexpr std::size_t kShapePoints = 256;
constexpr std::size_t kShapePerClass = 70;  // 50 train + 20 test
constexpr std::size_t kShapeTestPerClass = 20;
constexpr double kShapeNoise = 0.01;
constexpr std::uint64_t kShapeDataSeed = 7;
const std::vector<std::uint64_t> kRunSeeds{1, 2, 3};
constexpr std::size_t kOverfitClouds = 8;
constexpr std::size_t kOverfitSteps = 500;
constexpr double kOverfitLoss = 0.05;
constexpr double kOverfitTrainAccuracy = 0.99;
constexpr std::size_t kConcentrationReps = 15;
constexpr std::size_t kConcentrationDraws = 32;
constexpr std::size_t kPartsPerClass = 20;
constexpr std::size_t kPartsTestPerClass = 4;
constexpr std::size_t kPartsPoints = 256;
constexpr std::uint64_t kPartsDataSeed = 7;
constexpr double kSegAccuracy = 0.95;
constexpr double kSegIou = 0.90;
constexpr std::size_t kSegPasses = 10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string source_path(const std::string& rel) { return (fs::path(XCONV_SOURCE_DIR) / rel).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void randomize(ParamStore& store, Rng& rng) {
  for (Parameter* p : store.all()) {
    const bool is_var = p->name.ends_with("running_var");
    for (auto& v : p->value().data()) v = is_var ? rng.uniform(0.5, 1.5) : rng.uniform(-1.0, 1.0);
  }
}

XConvSpec spec_of(std::size_t k, std::size_t c_in, std::size_t c_out, bool global) {
  XConvSpec s;
  s.k = k;
  s.c_in = c_in;
  s.c_out = c_out;
  s.with_global = global;
  return s;
}

Tensor permute_rows(const Tensor& t, std::span<const std::size_t> perm) {
  const std::size_t cols = t.dim(1);
  Tensor out(t.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy_n(t.data().data() + perm[i] * cols, cols, out.data().data() + i * cols);
  }
  return out;
}

// ---------------------------------------------------------------- 1

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  struct Case {
    std::string name;
    std::function<double(std::uint64_t)> run;  // returns the relative error
  };
  auto unary = [](Shape shape, std::function<Var(const Var&)> op) {
    return [shape, op](std::uint64_t seed) {
      Rng rng(seed);
      Var x = ad::variable(random_tensor(shape, rng));
      return grad_check({x}, [&] { return random_projection(op(x), seed); }, kGradStep).relative_error;
    };
  };
  auto binary = [](Shape sa, Shape sb, std::function<Var(const Var&, const Var&)> op) {
    return [sa, sb, op](std::uint64_t seed) {
      Rng rng(seed);
      Var a = ad::variable(random_tensor(sa, rng));
      Var b = ad::variable(random_tensor(sb, rng));
      return grad_check({a, b}, [&] { return random_projection(op(a, b), seed); }, kGradStep).relative_error;
    };
  };

  std::vector<Case> cases{
      {"matmul", binary({3, 4}, {4, 5}, ad::matmul)},
      {"batched_matmul", binary({2, 3, 4}, {2, 4, 3}, ad::batched_matmul)},
      {"add", binary({3, 4}, {3, 4}, ad::add)},
      {"sub", binary({3, 4}, {3, 4}, ad::sub)},
      {"mul", binary({3, 4}, {3, 4}, ad::mul)},
      {"scale", unary({3, 4}, [](const Var& x) { return ad::scale(x, -1.7); })},
      {"add_bias", binary({2, 3, 4}, {4}, ad::add_bias)},
      {"sum", unary({3, 4}, [](const Var& x) { return ad::scale(ad::sum(x), 1.3); })},
      {"mean", unary({3, 4}, [](const Var& x) { return ad::scale(ad::mean(x), 1.3); })},
      {"elu", unary({4, 5}, [](const Var& x) { return ad::elu(ad::scale(x, 2.0)); })},
      {"reshape", unary({3, 4}, [](const Var& x) { return ad::reshape(x, {2, 6}); })},
      {"concat_cols", binary({3, 2}, {3, 4}, ad::concat_cols)},
      {"gather_rows", unary({5, 3}, [](const Var& x) {
         const std::vector<std::size_t> idx{4, 0, 0, 2, 4, 1};
         return ad::gather_rows(x, idx);
       })},
      {"depthwise_matrix_conv", binary({2, 4, 3}, {4, 3, 2}, ad::depthwise_matrix_conv)},
      {"separable_conv",
       [](std::uint64_t seed) {
         Rng rng(seed);
         Var f = ad::variable(random_tensor({2, 4, 3}, rng));
         Var dw = ad::variable(random_tensor({4, 3, 2}, rng));
         Var pw = ad::variable(random_tensor({6, 5}, rng));
         Var b = ad::variable(random_tensor({5}, rng));
         return grad_check({f, dw, pw, b}, [&] { return random_projection(ad::separable_conv(f, dw, pw, b), seed); },
                           kGradStep)
             .relative_error;
       }},
      {"fully_connected",
       [](std::uint64_t seed) {
         Rng rng(seed);
         Var x = ad::variable(random_tensor({4, 3}, rng));
         Var w = ad::variable(random_tensor({3, 5}, rng));
         Var b = ad::variable(random_tensor({5}, rng));
         return grad_check({x, w, b}, [&] { return random_projection(ad::fully_connected(x, w, b), seed); },
                           kGradStep)
             .relative_error;
       }},
      {"batchnorm",
       [](std::uint64_t seed) {
         Rng rng(seed);
         ParamStore store;
         ad::BatchNormState bn = ad::make_batchnorm(store, "bn", 3);
         randomize(store, rng);
         Var x = ad::variable(random_tensor({6, 3}, rng));
         const Mode mode = seed % 2 ? Mode::train : Mode::infer;
         return grad_check({x, bn.scale->node, bn.shift->node},
                           [&] { return random_projection(ad::batchnorm(x, bn, mode), seed); }, kGradStep)
             .relative_error;
       }},
      {"softmax_cross_entropy", unary({4, 5}, [](const Var& x) {
         const std::vector<int> labels{0, 4, 2, 2};
         return ad::softmax_cross_entropy(ad::scale(x, 2.0), labels);
       })},
      {"dropout",
       [](std::uint64_t seed) {
         Rng rng(seed);
         Var x = ad::variable(random_tensor({4, 6}, rng));
         return grad_check({x},
                           [&] {
                             Rng mask(seed * 7 + 1);  // same mask on every evaluation
                             return random_projection(ad::dropout(x, 0.4, Mode::train, mask), seed);
                           },
                           kGradStep)
             .relative_error;
       }},
  };
  // the composed operator, single neighborhood and batched, both variants
  cases.push_back({"xconv_forward", [](std::uint64_t seed) {
                     const bool global = seed % 2 == 1;
                     const std::size_t c_in = seed % 3 == 0 ? 0 : 3;
                     const Variant variant = seed % 4 == 3 ? Variant::ablated : Variant::full;
                     ParamStore store;
                     Rng rng(1000 + seed);
                     XConvLayer layer(store, "l", spec_of(4, c_in, 6, global), 3, variant, rng);
                     randomize(store, rng);
                     std::vector<Var> inputs;
                     for (Parameter* p : store.trainable()) inputs.push_back(p->node);
                     const Tensor pts = random_tensor({4, 3}, rng);
                     const std::vector<double> rep{0.2, -0.1, 0.3};
                     Var feats = c_in ? ad::variable(random_tensor({4, c_in}, rng)) : nullptr;
                     if (feats) inputs.push_back(feats);
                     return grad_check(inputs,
                                       [&] {
                                         return random_projection(
                                             variant == Variant::full
                                                 ? xconv_forward(layer, rep, pts, feats, Mode::infer)
                                                 : xconv_forward_ablated(layer, rep, pts, feats, Mode::infer),
                                             seed);
                                       },
                                       kGradStep)
                         .relative_error;
                   }});
  cases.push_back({"xconv_batched", [](std::uint64_t seed) {
                     const std::size_t c_in = seed % 2 ? 3 : 0;
                     ParamStore store;
                     Rng rng(2000 + seed);
                     XConvLayer layer(store, "l", spec_of(4, c_in, 6, seed % 3 == 0), 3, Variant::full, rng);
                     randomize(store, rng);
                     std::vector<Var> inputs;
                     for (Parameter* p : store.trainable()) inputs.push_back(p->node);
                     NeighborhoodBatch nb;
                     nb.count = 3;
                     nb.k = 4;
                     nb.local_coords = random_tensor({12, 3}, rng);
                     nb.global_coords = random_tensor({3, 3}, rng);
                     nb.feature_rows.resize(12);
                     for (auto& r : nb.feature_rows) r = rng.index(5);
                     Var table = c_in ? ad::variable(random_tensor({5, c_in}, rng)) : nullptr;
                     if (table) inputs.push_back(table);
                     return grad_check(inputs,
                                       [&] { return random_projection(layer.forward(nb, table, Mode::train), seed); },
                                       kGradStep)
                         .relative_error;
                   }});

  constexpr std::uint64_t kSeedsPerCase = 5;
  std::size_t count = 0, failed = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const Case& c : cases) {
    for (std::uint64_t s = 0; s < kSeedsPerCase; ++s) {
      const double err = c.run(s + 1);
      ++count;
      if (!(err < kGradTol)) ++failed;
      if (!(err <= worst)) {
        worst = err;
        worst_name = c.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && count >= kGradMinCases && secs < kGradSeconds;
  o.detail = fmt("gradient suite: %zu cases over %zu ops, %zu failed, max rel err %.2e (%s) < %.0e, %.1f s < %.0f s",
                 count, cases.size(), failed, worst, worst_name.c_str(), kGradTol, secs, kGradSeconds);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome geometric_oracles() {
  using namespace xconv::testing;
  const auto t0 = Clock::now();
  Rng rng(42);
  std::size_t knn_bad = 0, dil_bad = 0, fps_bad = 0, max_n = 0;
  for (std::size_t i = 0; i < kGeoInstances; ++i) {
    const std::size_t n = 16 + rng.index(kGeoMaxPoints - 15);
    max_n = std::max(max_n, n);
    const std::size_t dim = 2 + rng.index(2);
    const Tensor coords = random_cloud(n, dim, rng);
    std::vector<double> q(dim);
    for (double& v : q) v = rng.uniform(-1.0, 1.0);

    const std::size_t k = 1 + rng.index(std::min<std::size_t>(32, n));
    if (knn(coords, q, k) != brute_force_knn(coords, q, k)) ++knn_bad;

    const std::size_t kd = 1 + rng.index(8), d = 1 + rng.index(std::max<std::size_t>(1, std::min<std::size_t>(4, n / kd)));
    const auto pool = brute_force_knn(coords, q, kd * d);
    const Neighborhood nb = dilated_sample(coords, q, kd, d, rng);
    const std::set<std::size_t> uniq(nb.neighbor_indices.begin(), nb.neighbor_indices.end());
    bool ok = nb.neighbor_indices.size() == kd && uniq.size() == kd;
    for (std::size_t idx : nb.neighbor_indices) ok = ok && std::find(pool.begin(), pool.end(), idx) != pool.end();
    if (!ok) ++dil_bad;

    const std::size_t m = 1 + rng.index(std::min<std::size_t>(n, 64));
    const std::uint64_t fps_seed = rng.index(1u << 30);
    Rng a(fps_seed), b(fps_seed);
    const auto fa = farthest_point_sample(coords, m, a);
    const auto fb = farthest_point_sample(coords, m, b);
    bool fps_ok = fa == fb && fa == greedy_fps_oracle(coords, m, fa[0]);
    const std::set<std::size_t> fu(fa.begin(), fa.end());
    fps_ok = fps_ok && fu.size() == m;
    if (!fps_ok) ++fps_bad;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = knn_bad == 0 && dil_bad == 0 && fps_bad == 0 && secs < kGeoSeconds;
  o.detail = fmt("geometric oracles: %zu instances (N <= %zu), mismatches knn=%zu dilated=%zu fps=%zu, %.1f s < %.0f s",
                 kGeoInstances, max_n, knn_bad, dil_bad, fps_bad, secs, kGeoSeconds);
  return o;
}

// ---------------------------------------------------------------- 3

Outcome exact_reductions() {
  double id_err = 0.0, tr_err = 0.0, perm_err = 0.0;
  Rng rng(77);
  for (std::size_t t = 0; t < kReductionTrials; ++t) {
    const std::size_t k = 4 + rng.index(6), c_in = t % 2 ? 5 : 0;
    const bool global = t % 3 == 0;
    ParamStore store;
    XConvLayer layer(store, "l", spec_of(k, c_in, 12, global), 3, Variant::full, rng);
    randomize(store, rng);
    const Tensor pts = random_tensor({k, 3}, rng);
    const Tensor f = c_in ? random_tensor({k, c_in}, rng) : Tensor();
    const Var feats = c_in ? ad::constant(f) : nullptr;
    const std::vector<double> rep{rng.uniform(), rng.uniform(), rng.uniform()};

    // X = I: the transform drops out of the operator
    {
      ParamStore s2;
      Rng r2(t);
      XConvLayer l2(s2, "l", spec_of(k, c_in, 12, global), 3, Variant::full, r2);
      randomize(s2, r2);
      l2.force_identity_x();
      const Tensor a = xconv_forward(l2, rep, pts, feats, Mode::infer)->value;
      const Tensor b = xconv_forward_ablated(l2, rep, pts, feats, Mode::infer)->value;
      id_err = std::max(id_err, max_abs_diff(a, b));
    }
    // translation with the global lift off
    if (!global) {
      const std::vector<double> shift{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
      Tensor moved = pts;
      for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += shift[i % 3];
      std::vector<double> rep_moved = rep;
      for (std::size_t j = 0; j < 3; ++j) rep_moved[j] += shift[j];
      const Tensor a = xconv_forward(layer, rep, pts, feats, Mode::infer)->value;
      const Tensor b = xconv_forward(layer, rep_moved, moved, feats, Mode::infer)->value;
      tr_err = std::max(tr_err, max_abs_diff(a, b));
    }
    // reordered neighbors with X_b = X_a Pi^T give the same output
    {
      std::vector<std::size_t> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(std::span<std::size_t>(perm));
      const Tensor xa = random_tensor({k, k}, rng);
      Tensor pi_t({k, k});
      for (std::size_t i = 0; i < k; ++i) pi_t[perm[i] * k + i] = 1.0;
      const Tensor xb = ad::matmul(ad::constant(xa), ad::constant(pi_t))->value;
      const std::vector<double> g{0.1, 0.2, 0.3};
      const std::span<const double> gs = global ? std::span<const double>(g) : std::span<const double>();
      const Tensor a = xconv_forward_with_x(layer, rep, pts, feats, ad::constant(xa), Mode::infer, gs)->value;
      const Tensor b = xconv_forward_with_x(layer, rep, permute_rows(pts, perm),
                                            c_in ? ad::constant(permute_rows(f, perm)) : nullptr, ad::constant(xb),
                                            Mode::infer, gs)
                           ->value;
      perm_err = std::max(perm_err, max_abs_diff(a, b));
    }
  }
  Outcome o;
  o.pass = id_err <= kIdentityTol && tr_err <= kTranslationTol && perm_err <= kPermutationTol;
  o.detail = fmt("exact reductions over %zu trials: X=I vs ablated %.1e <= %.0e, translation %.1e <= %.0e, "
                 "permutation compensation %.1e <= %.0e",
                 kReductionTrials, id_err, kIdentityTol, tr_err, kTranslationTol, perm_err, kPermutationTol);
  return o;
}

// ---------------------------------------------------------------- 4

Outcome parameter_accounting() {
  std::size_t configs = 0, layers = 0, mismatches = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(source_path("configs"))) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& file : files) {
    const RunConfig cfg = load_config(file.string());
    ++configs;
    for (Variant v : {Variant::full, Variant::ablated}) {
      PointCNN net(cfg.network, v, 1);
      auto check = [&](XConvLayer& layer) {
        ++layers;
        const std::size_t census = net.params().trainable_count(layer.prefix() + ".");
        if (census != count_params(layer.spec(), cfg.network.dim, v).total) ++mismatches;
      };
      for (std::size_t i = 0; i < net.conv_count(); ++i) check(net.conv_layer(i));
      for (std::size_t i = 0; i < net.deconv_count(); ++i) check(net.deconv_layer(i));
    }
  }

  // closed forms: DM = ceil(C2 / (C1 + Cdelta)), separable core K*Cs*DM + Cs*DM*C2,
  // the transform's two depthwise stages K*K*K each
  XConvSpec s = spec_of(8, 16, 48, false);
  s.c_delta = 4;
  const ParamCount pc = count_params(s, 3);
  const std::size_t cs = 20, dm = (48 + cs - 1) / cs;
  const std::size_t sep_closed = 8 * cs * dm + cs * dm * 48;
  bool closed_ok = pc.sep_conv_core == 3360 && sep_closed == 3360 && s.depth_multiplier() == dm &&
                   pc.mlp_x_depthwise == 2 * 8 * 8 * 8;
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    XConvSpec r = spec_of(2 + rng.index(15), rng.index(64), 1 + rng.index(128), false);
    r.c_delta = 1 + rng.index(16);
    const std::size_t c = r.c_in + r.c_delta, m = (r.c_out + c - 1) / c;
    const ParamCount q = count_params(r, 3);
    closed_ok = closed_ok && q.sep_conv_core == r.k * c * m + c * m * r.c_out && q.mlp_x_depthwise == 2 * r.k * r.k * r.k;
  }
  Outcome o;
  o.pass = configs > 0 && mismatches == 0 && closed_ok;
  o.detail = fmt("parameter accounting: %zu shipped configs, %zu layer censuses, %zu mismatches; "
                 "k=8 Cin=20 C2=48 separable core %zu (closed form %zu, expected 3360), closed forms %s",
                 configs, layers, mismatches, pc.sep_conv_core, sep_closed, closed_ok ? "hold" : "violated");
  return o;
}

// ---------------------------------------------------------------- 5, 7, 8, 10

Dataset shape_data() {
  Rng rng(kShapeDataSeed);
  Dataset d = gen_shapes({Primitive::sphere, Primitive::cube, Primitive::ring}, kShapePerClass, kShapePoints,
                         kShapeNoise, rng);
  stratified_split(d, kShapeTestPerClass, rng);
  d.seed = kShapeDataSeed;
  return d;
}

// shipped configs name output paths; the suite writes nothing outside its work dir
RunConfig shipped_config(const std::string& name) {
  RunConfig cfg = load_config(source_path("configs/" + name));
  cfg.paths = PathsConfig{};
  return cfg;
}

RunConfig shape_config() { return shipped_config("shapes_cls.json"); }

struct ShapeRuns {
  std::vector<double> oa;
  double seconds = 0.0;
  std::unique_ptr<Trainer> first;  // seed kRunSeeds[0], kept for the feature analysis
  std::string metrics_path;
};

Outcome learning_gate(const Dataset& data, const fs::path& work, ShapeRuns& runs) {
  const auto t0 = Clock::now();
  for (std::uint64_t seed : kRunSeeds) {
    RunConfig cfg = shape_config();
    cfg.seed = seed;
    cfg.paths.metrics = (work / ("shapes_" + std::to_string(seed) + ".txt")).string();
    auto trainer = std::make_unique<Trainer>(cfg, data);
    trainer->train();
    runs.oa.push_back(
        evaluate(trainer->model(), data, data.indices(Split::test), 1, stream_seed(seed, Stream::eval, 0, 1))
            .overall_accuracy);
    if (!runs.first) {
      runs.first = std::move(trainer);
      runs.metrics_path = cfg.paths.metrics;
    }
  }
  runs.seconds = seconds_since(t0);
  const std::size_t passed = std::count_if(runs.oa.begin(), runs.oa.end(), [](double a) { return a >= kShapeAccuracy; });
  Outcome o;
  o.pass = passed == runs.oa.size() && runs.seconds < kShapeSeconds;
  std::string accs;
  for (double a : runs.oa) accs += fmt("%s%.4f", accs.empty() ? "" : ", ", a);
  o.detail = fmt("learning gate: %zu train + %zu test clouds of %zu points, test OA [%s] >= %.2f for %zu/%zu seeds, "
                 "%.0f s < %.0f s",
                 data.indices(Split::train).size(), data.indices(Split::test).size(), kShapePoints, accs.c_str(),
                 kShapeAccuracy, passed, runs.oa.size(), runs.seconds, kShapeSeconds);
  return o;
}

Outcome overfit_gate() {
  Rng rng(kShapeDataSeed + 1);
  Dataset data = gen_shapes({Primitive::sphere, Primitive::cube, Primitive::ring}, 3, kShapePoints, kShapeNoise, rng);
  data.clouds.resize(kOverfitClouds);
  data.split.resize(kOverfitClouds);
  RunConfig cfg = shape_config();
  cfg.seed = 1;
  cfg.network.dropout = false;
  cfg.augmentation.enabled = false;
  cfg.optimizer.batch_size = kOverfitClouds;
  cfg.optimizer.lr_decay = 1.0;
  Trainer t(cfg, data);
  const std::vector<Batch> batch = t.prepare_epoch(1);
  double first = 0.0, last = 0.0;
  std::size_t reached = 0;
  for (std::size_t step = 1; step <= kOverfitSteps; ++step) {
    last = t.train_step(batch[0].clouds, stream_seed(cfg.seed, Stream::model, step));
    if (step == 1) first = last;
    if (last < kOverfitLoss) {
      reached = step;
      break;
    }
  }
  const auto ids = data.indices(Split::train);
  const double train_oa = evaluate(t.model(), data, ids, 1, 0).overall_accuracy;
  Outcome o;
  o.pass = reached > 0 && train_oa >= kOverfitTrainAccuracy;
  o.detail = fmt("overfit gate: %zu clouds, loss %.4f -> %.4f, below %.2f %s%zu steps (budget %zu), "
                 "train-split OA %.4f >= %.2f",
                 kOverfitClouds, first, last, kOverfitLoss, reached ? "after " : "not within ", reached ? reached : kOverfitSteps,
                 kOverfitSteps, train_oa, kOverfitTrainAccuracy);
  return o;
}

Outcome ablation_ordering(const Dataset& data) {
  const AblationReport r = run_ablation(shape_config(), data, kRunSeeds);
  std::size_t p_full = 0, p_abl = 0;
  for (const AblationRun& run : r.runs) (run.variant == Variant::full ? p_full : p_abl) = run.params;
  Outcome o;
  o.pass = r.mean_full >= r.mean_ablated && r.paired && p_full - p_abl == r.mlp_x_census;
  o.detail = fmt("ablation over %zu paired seeds: mean test OA full %.4f >= ablated %.4f; params full %zu, "
                 "ablated %zu (difference %zu = transform census %zu); paired batches %s",
                 kRunSeeds.size(), r.mean_full, r.mean_ablated, p_full, p_abl, p_full - p_abl, r.mlp_x_census,
                 r.paired ? "yes" : "no");
  return o;
}

Outcome concentration(const Dataset& data, ShapeRuns& runs) {
  if (!runs.first) return {false, "concentration: no trained model"};
  // the ablated counterpart only supplies F_o for the report
  RunConfig cfg = runs.first->config();
  cfg.paths.metrics.clear();
  Trainer ablated(cfg, data, Variant::ablated);
  ablated.train();

  FeatureConfig fc = cfg.features;
  fc.reps = kConcentrationReps;
  fc.draws = kConcentrationDraws;
  const std::vector<PointSet> clouds = data.subset(Split::test);
  const ConcentrationReport r = analyze_features(runs.first->model(), &ablated.model(), clouds, fc, cfg.seed);
  const double chance = 1.0 / static_cast<double>(kConcentrationReps);
  Outcome o;
  o.pass = r.acc_x >= r.acc_star && r.acc_star > chance && r.acc_x > chance;
  o.detail = fmt("concentration at conv layer %zu, R=%zu, M=%zu: acc(F_X) %.4f vs acc(F_*) %.4f (need F_X >= F_*), "
                 "both > %.4f (acc(F_o) %.4f)",
                 r.layer, r.reps, r.draws, r.acc_x, r.acc_star, chance, r.acc_o);
  return o;
}

Outcome determinism(const Dataset& data, const fs::path& work, const ShapeRuns& runs) {
  if (runs.metrics_path.empty()) return {false, "determinism: criterion 5 produced no metrics file"};
  RunConfig cfg = shape_config();
  cfg.seed = kRunSeeds[0];
  cfg.paths.metrics = (work / "shapes_rerun.txt").string();
  Trainer(cfg, data).train();
  const std::string a = slurp(runs.metrics_path), b = slurp(cfg.paths.metrics);
  Outcome o;
  o.pass = !a.empty() && a == b;
  o.detail = fmt("determinism: rerun of seed %llu metrics file %zu bytes vs %zu bytes, %s",
                 static_cast<unsigned long long>(cfg.seed), a.size(), b.size(),
                 a == b ? "byte-identical" : "different");
  return o;
}

// ---------------------------------------------------------------- 9

Outcome segmentation_gate() {
  Rng rng(kPartsDataSeed);
  Dataset data = gen_parts(kPartsPerClass, kPartsPoints, rng);
  stratified_split(data, kPartsTestPerClass, rng);
  RunConfig cfg = shipped_config("parts_seg.json");
  Trainer t(cfg, data);
  t.train();

  const auto ids = data.indices(Split::train);
  std::size_t uncovered = 0, min_count = ~std::size_t{0};
  for (std::size_t id : ids) {
    Rng pass_rng(derive_seed(99, id));
    const MultipassPrediction mp = predict_multipass(t.model(), data.clouds[id], kSegPasses, pass_rng);
    for (std::size_t c : mp.counts) {
      uncovered += c < kSegPasses;
      min_count = std::min(min_count, c);
    }
  }
  const Metrics m = evaluate(t.model(), data, ids, kSegPasses, stream_seed(cfg.seed, Stream::eval, 0, 1));
  Outcome o;
  o.pass = m.overall_accuracy >= kSegAccuracy && m.part_avg_iou >= kSegIou && m.mean_iou >= kSegIou && uncovered == 0;
  o.detail = fmt("segmentation on train split (%zu clouds), r=%zu: per-point accuracy %.4f >= %.2f, pIoU %.4f and "
                 "mIoU %.4f >= %.2f (mpIoU %.4f), min coverage %zu, uncovered points %zu",
                 ids.size(), kSegPasses, m.overall_accuracy, kSegAccuracy, m.part_avg_iou, m.mean_iou, kSegIou,
                 m.mean_part_iou, min_count, uncovered);
  return o;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) {
      expected.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--expect-fail N]...\n");
      return 64;
    }
  }
  const fs::path work = fs::temp_directory_path() / "xconv_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failed = 0, unexpected = 0;
  auto report = [&](int n, const Outcome& o) {
    const bool known = expected.count(n) > 0;
    std::printf("criterion %2d: %s  %s%s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                known ? (o.pass ? " [expected to fail, passed]" : " [expected failure]") : "");
    std::fflush(stdout);
    failed += !o.pass;
    unexpected += !o.pass && !known;
  };

  report(1, guarded(gradient_suite));
  report(2, guarded(geometric_oracles));
  report(3, guarded(exact_reductions));
  report(4, guarded(parameter_accounting));

  const Dataset shapes = shape_data();
  ShapeRuns runs;
  report(5, guarded([&] { return learning_gate(shapes, work, runs); }));
  report(6, guarded(overfit_gate));
  report(7, guarded([&] { return ablation_ordering(shapes); }));
  report(8, guarded([&] { return concentration(shapes, runs); }));
  report(9, guarded(segmentation_gate));
  report(10, guarded([&] { return determinism(shapes, work, runs); }));

  std::printf("%d of 10 criteria failed, %d unexpectedly\n", failed, unexpected);
  fs::remove_all(work);
  return unexpected;
}
