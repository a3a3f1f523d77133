// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "catnet/harness/experiments.hpp"
#include "catnet/numerics/grad_check.hpp"
#include "catnet/numerics/ops.hpp"
#include "catnet/simworld/render.hpp"
#include "catnet/wavelet/haar.hpp"
#include "catnet/wtden/scan.hpp"
#include "catnet/wtden/ssm.hpp"
#include "grad_cases.hpp"
#include "test_util.hpp"

using namespace catnet;
using catnet::testing::random_tensor;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %-24s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void wavelet_correctness() {
  const auto t0 = Clock::now();
  NoGradGuard guard;
  double max_err = 0.0, max_energy = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Tensor x = random_tensor({8, 32, 32}, seed);
    wavelet::SubbandSet b = wavelet::haar_wt2d(Var(x));
    Tensor back = wavelet::haar_iwt2d(b).value();
    max_err = std::max(max_err, max_abs_diff(back, x));
    double ex = 0.0, eb = 0.0;
    for (double v : x.data()) ex += v * v;
    for (const Var* band : {&b.ll, &b.lh, &b.hl, &b.hh}) {
      for (double v : band->value().data()) eb += v * v;
    }
    max_energy = std::max(max_energy, std::abs(eb - ex) / ex);
  }
  const double t = seconds_since(t0);
  report("wavelet_correctness", max_err <= 1e-12 && max_energy <= 1e-9 && t < 5.0,
         fmt("1000 tensors 8x32x32: max|IWT(WT x)-x| %.2e (<=1e-12), energy rel %.2e (<=1e-9), "
             "%.2fs (<5s)",
             max_err, max_energy, t));
}

// Generic, non-integer sample positions so bilinear sampling is smooth.
void randomize_stsync(stsync::StSync& s, std::uint64_t seed) {
  s.offset_weight.mutable_value() = random_tensor(s.offset_weight.shape(), seed, -0.05, 0.05);
  s.offset_bias.mutable_value() = random_tensor({2}, seed + 1, -0.4, 0.4);
  s.update_offset_weight.mutable_value() =
      random_tensor(s.update_offset_weight.shape(), seed + 2, -0.05, 0.05);
  s.update_offset_bias.mutable_value() = random_tensor({2}, seed + 3, -0.4, 0.4);
  s.dca_bias.mutable_value() = random_tensor(s.dca_bias.shape(), seed + 4, -1.3, 1.3);
  s.motion_warp.weight.mutable_value() =
      random_tensor(s.motion_warp.weight.shape(), seed + 5, -0.2, 0.2);
  s.update_warp.weight.mutable_value() =
      random_tensor(s.update_warp.weight.shape(), seed + 6, -0.2, 0.2);
}

void gradient_suite() {
  const auto t0 = Clock::now();
  using Fn = std::function<Var(const Var&)>;
  struct Item {
    std::string name;
    std::function<std::pair<Fn, Tensor>(std::uint64_t)> make;
  };
  std::vector<Item> items;
  for (const auto& c : catnet::testing::numerics_op_cases()) {
    items.push_back({c.name, [c](std::uint64_t seed) {
                       return std::pair<Fn, Tensor>{[c, seed](const Var& v) { return c.fn(v, seed); },
                                                    catnet::testing::op_case_input(c, seed)};
                     }});
  }
  auto weighted = [](const Var& v, std::uint64_t seed) {
    return sum(mul(v, Var(random_tensor(v.shape(), seed + 777))));
  };
  items.push_back({"haar_wt2d", [=](std::uint64_t seed) {
                     return std::pair<Fn, Tensor>{
                         [=](const Var& v) { return weighted(wavelet::haar_wt2d_stacked(v), seed); },
                         random_tensor({2, 4, 6}, seed)};
                   }});
  items.push_back({"haar_iwt2d", [=](std::uint64_t seed) {
                     return std::pair<Fn, Tensor>{
                         [=](const Var& v) { return weighted(wavelet::haar_iwt2d_stacked(v), seed); },
                         random_tensor({8, 2, 3}, seed)};
                   }});
  for (std::size_t which = 0; which < 5; ++which) {
    items.push_back({"ssm_recurrence[" + std::to_string(which) + "]", [=](std::uint64_t seed) {
                       const std::size_t len = 5, c = 2, n = 3;
                       std::vector<Tensor> in = {
                           random_tensor({len, c}, seed + 1), random_tensor({len, c}, seed + 2, 0.1, 1.5),
                           random_tensor({c, n}, seed + 3, -2, -0.2), random_tensor({len, n}, seed + 4),
                           random_tensor({len, n}, seed + 5)};
                       Fn fn = [=](const Var& v) {
                         std::vector<Var> a;
                         for (std::size_t i = 0; i < in.size(); ++i) a.push_back(i == which ? v : Var(in[i]));
                         return weighted(wtden::ssm_recurrence(a[0], a[1], a[2], a[3], a[4]), seed);
                       };
                       return std::pair<Fn, Tensor>{fn, in[which]};
                     }});
  }
  items.push_back({"stsync_rollout_dca", [=](std::uint64_t seed) {
                     auto ps = std::make_shared<ParameterSet>();
                     stsync::StSyncConfig cfg;
                     cfg.channels = 4;
                     auto s = std::make_shared<stsync::StSync>(*ps, cfg, seed);
                     randomize_stsync(*s, 100 + seed);
                     const Tensor ego = random_tensor({4, 6, 6}, 500 + seed);
                     Fn fn = [=](const Var& v) {
                       std::vector<Var> buf;
                       for (std::size_t i = 0; i < 3; ++i) {
                         buf.push_back(reshape(slice(v, 0, i, i + 1), {4, 6, 6}));
                       }
                       (void)ps;
                       return weighted(s->dca_refine(s->taru_rollout(buf), Var(ego)), seed);
                     };
                     return std::pair<Fn, Tensor>{fn, random_tensor({3, 4, 6, 6}, 600 + seed)};
                   }});
  items.push_back({"wtden_forward", [=](std::uint64_t seed) {
                     auto ps = std::make_shared<ParameterSet>();
                     auto m = std::make_shared<wtden::WtDen>(*ps, wtden::WtDenConfig{2, 4}, seed);
                     Fn fn = [=](const Var& v) {
                       (void)ps;
                       return weighted(m->forward(v), seed);
                     };
                     return std::pair<Fn, Tensor>{fn, random_tensor({2, 8, 8}, 700 + seed)};
                   }});
  items.push_back({"adpsel_forward", [=](std::uint64_t seed) {
                     auto ps = std::make_shared<ParameterSet>();
                     adpsel::AdpSelConfig cfg;
                     cfg.channels = 3;
                     cfg.scales = {2, 4};
                     auto a = std::make_shared<adpsel::AdpSel>(*ps, cfg, seed);
                     Fn fn = [=](const Var& v) {
                       (void)ps;
                       return weighted(a->forward(v), seed);
                     };
                     return std::pair<Fn, Tensor>{fn, random_tensor({3, 8, 8}, 800 + seed)};
                   }});

  double worst = 0.0;
  std::string worst_name;
  std::vector<std::string> failed;
  for (const auto& item : items) {
    double item_worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto [fn, x] = item.make(seed);
      const double e = grad_check_detailed(fn, x, 1e-4).max_relative_error;
      item_worst = std::max(item_worst, e);
    }
    if (item_worst >= 1e-4) failed.push_back(item.name + fmt("=%.1e", item_worst));
    if (item_worst > worst) {
      worst = item_worst;
      worst_name = item.name;
    }
  }
  const double t = seconds_since(t0);
  std::string detail = fmt("%zu ops/modules x 10 seeds, eps 1e-4: worst rel err %.2e (%s) (<1e-4), "
                           "%.1fs (<120s)",
                           items.size(), worst, worst_name.c_str(), t);
  for (const auto& f : failed) detail += " failed:" + f;
  report("gradient_suite", failed.empty() && t < 120.0, detail);
}

void scan_bijectivity() {
  using wtden::ScanDirection;
  std::mt19937_64 rng(11);
  std::size_t checked = 0, bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 1 + rng() % 4, h = 1 + rng() % 6, w = 1 + rng() % 6;
    wavelet::SubbandSet b{Var(random_tensor({c, h, w}, rng())), Var(random_tensor({c, h, w}, rng())),
                          Var(random_tensor({c, h, w}, rng())), Var(random_tensor({c, h, w}, rng()))};
    for (int order = 0; order < 4; ++order) {
      const ScanDirection dir = order % 2 ? ScanDirection::kReverse : ScanDirection::kForward;
      wtden::ScanSequence seq =
          order < 2 ? wtden::progressive_scan(b, dir) : wtden::interleaved_scan(b, dir);
      wavelet::SubbandSet back = wtden::inverse_scan(seq);
      bool same = true;
      const Var* lhs[] = {&b.ll, &b.lh, &b.hl, &b.hh};
      const Var* rhs[] = {&back.ll, &back.lh, &back.hl, &back.hh};
      for (int k = 0; k < 4; ++k) {
        const auto x = lhs[k]->value().data(), y = rhs[k]->value().data();
        same = same && lhs[k]->shape() == rhs[k]->shape() && std::equal(x.begin(), x.end(), y.begin());
      }
      bad += !same;
      ++checked;
    }
  }
  report("scan_bijectivity", bad == 0,
         fmt("%zu round trips (100 subband sets x 4 orders), %zu not bitwise equal", checked, bad));
}

void mask_algebra() {
  using namespace catnet::adpsel;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double kNegInf = -std::numeric_limits<double>::infinity();
  std::size_t partition_bad = 0, count_bad = 0, scaling_bad = 0, monotone_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t s = std::size_t{1} << (rng() % 3);
    BlockGrid g(16, 16, s);
    std::vector<double> scores(g.count());
    std::size_t eligible = 0;
    for (auto& v : scores) {
      v = u(rng) < -0.5 ? kNegInf : u(rng);
      eligible += std::isfinite(v);
    }
    const double k = 0.05 + 0.95 * (u(rng) + 1.0) / 2.0;
    SelectionMask m = topk_select(scores, g, k);
    // Retained count.
    std::size_t selected = 0;
    for (auto b : m.block_mask) selected += b;
    const auto want = static_cast<std::size_t>(std::ceil(k * static_cast<double>(eligible) - 1e-9));
    count_bad += m.retained_count != want || selected != want;
    // Partition: selected and unselected parts are disjoint and sum to the feature.
    Tensor f = random_tensor({2, 16, 16}, rng());
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t p = 0; p < 256; ++p) {
        const double mk = m.pixel_mask[p], x = f[c * 256 + p];
        const double sel = mk * x, unsel = (1.0 - mk) * x;
        if (sel + unsel != x || (sel != 0.0 && unsel != 0.0)) ++partition_bad;
      }
    }
    // Positive rescaling keeps the selection.
    std::vector<double> scaled = scores;
    const double factor = std::exp(3.0 * u(rng));
    for (auto& v : scaled) v *= factor;
    scaling_bad += topk_select(scaled, g, k).block_mask != m.block_mask;
  }
  ParameterSet ps;
  AdpSelConfig cfg;
  cfg.channels = 2;
  cfg.scales = {2, 4, 8};
  AdpSel a(ps, cfg, 5);
  NoGradGuard guard;
  for (int trial = 0; trial < 1000; ++trial) {
    AdpSelTrace tr;
    a.forward(Var(random_tensor({2, 16, 16}, 10'000 + trial)), &tr);
    for (std::size_t i = 1; i < tr.eligibility.size(); ++i) {
      for (std::size_t p = 0; p < 256; ++p) {
        monotone_bad += tr.eligibility[i][p] > tr.eligibility[i - 1][p];
      }
    }
    for (std::size_t i = 0; i < tr.selections.size(); ++i) {
      std::size_t eligible = 0;
      for (double v : tr.scores[i]) eligible += std::isfinite(v);
      count_bad += tr.selections[i].retained_count !=
                   static_cast<std::size_t>(std::ceil(cfg.k * static_cast<double>(eligible) - 1e-9));
    }
  }
  report("mask_algebra",
         partition_bad + count_bad + scaling_bad + monotone_bad == 0,
         fmt("1000 cases each: partition violations %zu, retention count mismatches %zu, "
             "monotonicity violations %zu, rescaling changes %zu",
             partition_bad, count_bad, monotone_bad, scaling_bad));
}

void convex_gate() {
  ParameterSet ps;
  stsync::StSyncConfig cfg;
  cfg.channels = 4;
  stsync::StSync s(ps, cfg, 9);
  randomize_stsync(s, 3);
  NoGradGuard guard;
  std::size_t bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Tensor h = random_tensor({4, 6, 6}, seed, -3, 3), w = random_tensor({4, 6, 6}, seed + 5000, -3, 3);
    auto g = s.st_gate(Var(h), Var(w));
    for (std::size_t i = 0; i < h.numel(); ++i) {
      const double v = g.fused.value()[i];
      const double over = std::max(std::min(h[i], w[i]) - v, v - std::max(h[i], w[i]));
      worst = std::max(worst, over);
      bad += over > 1e-12;
    }
  }
  report("convex_gate", bad == 0,
         fmt("1000 random pairs: %zu elements outside [min,max]+-1e-12, worst excess %.2e", bad,
             worst));
}

void channel_statistics() {
  simworld::ChannelConfig cfg;
  cfg.max_latency_ticks = 5;
  cfg.drop_probability = 0.3;
  simworld::ChannelRng rng(2024);
  FeatureGrid f;
  f.data = Var(Tensor({1, 4, 4}));
  std::vector<simworld::FeaturePacket> packets(10000, {f, 1, 0, 0, false, {}});
  auto out = simworld::channel_deliver(packets, cfg, 1000, rng);
  std::vector<double> hist(6, 0.0);
  bool bounded = true;
  for (const auto& p : out) {
    const long lat = p.arrive_tick - p.emit_tick;
    bounded = bounded && lat >= 0 && lat <= 5;
    if (lat >= 0 && lat <= 5) hist[static_cast<std::size_t>(lat)] += 1;
  }
  const double expected = static_cast<double>(out.size()) / 6.0;
  double chi2 = 0.0;
  for (double h : hist) chi2 += (h - expected) * (h - expected) / expected;
  const double drop = 1.0 - static_cast<double>(out.size()) / 10000.0;
  const double critical = 15.086;  // chi-square 99% quantile, 5 degrees of freedom
  report("channel_statistics", bounded && chi2 < critical && std::abs(drop - 0.3) <= 0.02,
         fmt("10000 packets, L=5 p=0.3: latency chi2 %.2f (<%.3f), drop rate %.4f (0.3+-0.02)", chi2,
             critical, drop));
}

void transform_composition() {
  using namespace catnet::simworld;
  GridSpec g;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> off(-3, 3), rot(-0.4, 0.4);
  Scene s = random_scene({}, 77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Pose2D a{off(rng), off(rng), rot(rng)}, b{off(rng), off(rng), rot(rng)}, c{off(rng), off(rng), rot(rng)};
    FeatureGrid fa = render_bev(s, a, g, 30.0);
    Tensor via = transform_to_ego(transform_to_ego(fa, a, b, g), b, c, g).data.value();
    Tensor direct = transform_to_ego(fa, a, c, g).data.value();
    Tensor ca = ego_sampling_coords(a, c, g), cb = ego_sampling_coords(b, c, g);
    const std::size_t hw = g.height * g.width;
    double err = 0.0;
    std::size_t n = 0;
    auto inner = [&](double v, std::size_t extent) { return v >= 1.0 && v <= double(extent) - 2.0; };
    for (std::size_t p = 0; p < hw; ++p) {
      // Interior: both resampling paths read well inside their source grids.
      if (!inner(ca[p], g.height) || !inner(ca[hw + p], g.width) || !inner(cb[p], g.height) ||
          !inner(cb[hw + p], g.width)) {
        continue;
      }
      for (std::size_t k = 0; k < via.shape()[0]; ++k) err += std::abs(via[k * hw + p] - direct[k * hw + p]);
      n += via.shape()[0];
    }
    worst = std::max(worst, n ? err / double(n) : 1.0);
  }
  report("transform_composition", worst < 1e-2,
         fmt("50 pose triples: worst interior mean |a->b->c - a->c| %.2e (<1e-2)", worst));
}

struct Trained {
  double iou = 0.0;
  double mse = 0.0;
  double mse_strong_noise = 0.0;  // evaluated with 0.4/0.4 pose noise
  double seconds = 0.0;
};

void trained_trends() {
  using namespace catnet::harness;
  const std::vector<std::string> ids = {"baseline", "stsync", "wtden", "adpsel", "full"};
  std::map<std::string, std::vector<Trained>> runs;
  const PipelineConfig base;  // default desk scale: L=3, 0.2/0.2 pose noise
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& row : ablation_rows()) {
      if (std::find(ids.begin(), ids.end(), row.id) == ids.end()) continue;
      PipelineConfig cfg = base;
      cfg.id = row.id;
      cfg.modules = row.modules;
      cfg.training.seed = seed;
      const auto t0 = Clock::now();
      CatNet model(cfg, seed);
      train(model, cfg);
      Trained r;
      const MetricRecord m = evaluate(model, cfg);
      r.seconds = seconds_since(t0);
      r.iou = m.iou;
      r.mse = m.mse_to_clean;
      PipelineConfig noisy = cfg;
      noisy.channel.loc_noise = noisy.channel.head_noise = 0.4;
      r.mse_strong_noise = evaluate(model, noisy).mse_to_clean;
      runs[row.id].push_back(r);
      std::printf("  seed %llu %-9s iou %.4f mse(0.2) %.5f mse(0.4) %.5f  %.1fs\n",
                  static_cast<unsigned long long>(seed), row.id.c_str(), r.iou, r.mse,
                  r.mse_strong_noise, r.seconds);
      std::fflush(stdout);
    }
  }
  auto mean_iou = [&](const std::string& id) {
    double s = 0.0;
    for (const auto& r : runs[id]) s += r.iou;
    return s / static_cast<double>(runs[id].size());
  };
  double latency_seconds = 0.0;
  for (const auto& r : runs["baseline"]) latency_seconds += r.seconds;
  for (const auto& r : runs["full"]) latency_seconds += r.seconds;
  const double gain = 100.0 * (mean_iou("full") - mean_iou("baseline"));
  report("latency_compensation", gain >= 5.0 && latency_seconds < 900.0,
         fmt("L=3, noise 0.2/0.2, 5 seeds: full IoU %.4f vs baseline %.4f, gain %+.2f points "
             "(>=5), %.0fs (<900s)",
             mean_iou("full"), mean_iou("baseline"), gain, latency_seconds));

  int wins02 = 0, wins04 = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    wins02 += runs["wtden"][i].mse < runs["baseline"][i].mse;
    wins04 += runs["wtden"][i].mse_strong_noise < runs["baseline"][i].mse_strong_noise;
  }
  report("denoising", wins02 == 5 && wins04 == 5,
         fmt("MSE to clean, wtden on vs off, paired seeds: wins %d/5 at 0.2/0.2, %d/5 at 0.4/0.4",
             wins02, wins04));

  const double full = mean_iou("full");
  bool ok = true;
  std::string detail = fmt("mean IoU over 5 seeds: full %.4f", full);
  for (const char* id : {"stsync", "wtden", "adpsel"}) {
    const double v = mean_iou(id);
    ok = ok && full >= v - 0.005;
    detail += fmt(", %s %.4f", id, v);
  }
  detail += " (full >= each - 0.005)";
  report("ablation_monotonicity", ok, detail);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CATNET_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "catnet_acceptance_cli";
  fs::remove_all(dir);
  const int a = run_cli("run --seed 7 --out " + (dir / "a").string());
  const int b = run_cli("run --seed 7 --out " + (dir / "b").string());
  const std::string ma = slurp(dir / "a" / "metrics.csv"), mb = slurp(dir / "b" / "metrics.csv");
  const bool same = a == 0 && b == 0 && !ma.empty() && ma == mb;
  report("cli_determinism", same,
         fmt("two `run --seed 7` invocations: exit %d/%d, metrics.csv %zu bytes, byte-identical: %s", a,
             b, ma.size(), ma == mb ? "yes" : "no"));
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  const bool skip_training = argc > 1 && std::string(argv[1]) == "--no-training";
  wavelet_correctness();
  gradient_suite();
  scan_bijectivity();
  mask_algebra();
  convex_gate();
  channel_statistics();
  transform_composition();
  if (!skip_training) trained_trends();
  cli_determinism();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
