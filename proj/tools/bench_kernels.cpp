// Timing comparison of the OpenMP kernels against the serial reference,
// plus a batch-gradient workload. Also asserts that both paths agree
// bit-for-bit, which is the property the test suite relies on.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "bbci/core/kernels.hpp"
#include "bbci/core/rng.hpp"
#include "bbci/diffnet/gradcheck.hpp"
#include "bbci/diffnet/net.hpp"

using namespace bbci;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  std::size_t size = 2048;
  std::size_t reps = 20;
  app.add_option("--size", size, "matrix dimension");
  app.add_option("--reps", reps, "repetitions per measurement");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both paths run serially\n");
#endif

  Rng rng(42);
  const Matrix w = random_matrix(size, size, rng);
  const Vector x = random_vector(size, rng);

  bool exact = true;

  {
    Vector ys, yp;
    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < reps; ++r) ys = kernels::serial::matvec(w, x);
    const double ts = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < reps; ++r) yp = kernels::matvec(w, x);
    const double tp = seconds_since(t0);
    exact = exact && ys == yp;
    std::printf("matvec   %zux%zu: serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n", size,
                size, 1e3 * ts / reps, 1e3 * tp / reps, ts / tp);
  }

  {
    const std::size_t ms = size / 4;
    const Matrix a = random_matrix(ms, ms, rng);
    const Matrix b = random_matrix(ms, ms, rng);
    Matrix cs, cp;
    auto t0 = std::chrono::steady_clock::now();
    cs = kernels::serial::matmul(a, b);
    const double ts = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    cp = kernels::matmul(a, b);
    const double tp = seconds_since(t0);
    exact = exact && cs == cp;
    std::printf("matmul   %zux%zu: serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n", ms, ms,
                1e3 * ts, 1e3 * tp, ts / tp);
  }

  {
    // batch gradients: independent per-trial BPTT, the training hot loop
    using namespace diffnet;
    Rng nrng(7);
    NetParams net;
    net.layers.push_back(make_recurrent("rec", 32, 48, Activation::tanh, nrng));
    net.layers.push_back(make_dense("out", 48, 2, Activation::identity, nrng));
    const std::size_t trials = 64, steps = 100;
    std::vector<std::vector<Vector>> inputs(trials), targets(trials);
    for (auto& seq : inputs) {
      seq.assign(steps, Vector(32));
      for (auto& v : seq)
        for (auto& e : v) e = nrng.uniform(-1.0, 1.0);
    }
    for (auto& seq : targets) {
      seq.assign(steps, Vector(2));
      for (auto& v : seq)
        for (auto& e : v) e = nrng.uniform(-1.0, 1.0);
    }

    auto trial_grads = [&](std::size_t ti) {
      const auto fwd = net_forward(net, inputs[ti]);
      std::vector<Vector> og(steps, Vector(2));
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < 2; ++i)
          og[t][i] = 2.0 * (fwd.outputs[t][i] - targets[ti][t][i]);
      return net_backward(net, inputs[ti], nullptr, og).grads;
    };

    std::vector<GradSet> slots(trials);
    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t ti = 0; ti < trials; ++ti) slots[ti] = trial_grads(ti);
    GradSet serial_total = zero_grads(net);
    for (const auto& g : slots) serial_total.add_scaled(g, 1.0);
    const double ts = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t ti = 0; ti < static_cast<std::int64_t>(trials); ++ti)
      slots[ti] = trial_grads(ti);
    GradSet parallel_total = zero_grads(net);
    for (const auto& g : slots) parallel_total.add_scaled(g, 1.0);
    const double tp = seconds_since(t0);

    GradSet diff = parallel_total;
    diff.add_scaled(serial_total, -1.0);
    exact = exact && diff.max_abs() == 0.0;
    std::printf("batchgrad %zu trials x %zu steps: serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n",
                trials, steps, 1e3 * ts, 1e3 * tp, ts / tp);
  }

  std::printf("bitwise agreement serial vs parallel: %s\n", exact ? "yes" : "NO");
  return exact ? 0 : 1;
}
