#include <random>

#include <doctest.h>

#include "glove/synth.hpp"
#include "support/oracles.hpp"

using namespace glove;

TEST_SUITE("synth") {

TEST_CASE("gauge response: zero at zero, strictly increasing, knee continuity") {
  synth::GaugeModel g;
  CHECK(g.response(0.0) == 0.0);
  CHECK(g.response(synth::kStrainFloorPct) > 0.0);  // floor strain is detectable

  // Strict monotonicity, property-tested on random ordered pairs.
  nn::Rng rng(1);
  std::uniform_real_distribution<Scalar> u(0.0, synth::kStrainMaxPct);
  for (int i = 0; i < 1000; ++i) {
    Scalar a = u(rng), b = u(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    CHECK(g.response(a) < g.response(b));
  }

  // Piecewise-linear with a steeper low segment, continuous at the knee.
  CHECK(g.response(10.0) == doctest::Approx(0.08 * 10.0).epsilon(1e-12));
  CHECK(g.response(30.0) == doctest::Approx(0.08 * 20.0 + 0.02 * 10.0).epsilon(1e-12));
  CHECK(g.response(g.knee_strain + 1e-9) - g.response(g.knee_strain - 1e-9) < 1e-9);
  CHECK(g.slope_low > g.slope_high);

  // Domain clamps: out-of-range strain saturates.
  CHECK(g.response(synth::kStrainMaxPct + 50) == g.response(synth::kStrainMaxPct));
  CHECK(g.response(-5.0) == 0.0);
}

TEST_CASE("angle_to_strain rectifies extension") {
  CHECK(synth::angle_to_strain(40.0) == doctest::Approx(12.0));
  CHECK(synth::angle_to_strain(-15.0) == 0.0);
  CHECK(synth::angle_to_strain(0.0) == 0.0);
}

TEST_CASE("coupling matrix: nonnegative, dominant own-joint entries, full sensor coverage") {
  Matrix c = synth::standard_coupling();
  REQUIRE(c.rows() == kStrainChannels);
  REQUIRE(c.cols() == kJointCount);
  CHECK(c.minCoeff() >= 0.0);
  for (Index s = 0; s < c.rows(); ++s) {
    Index main;
    const Scalar biggest = c.row(s).maxCoeff(&main);
    CHECK(biggest > 0.0);                                 // every sensor listens to something
    CHECK(biggest > c.row(s).sum() - biggest - 1e-12);    // own joint beats all crosstalk
  }
  // Spot-check the documented placement: sensor 0 is the pinky MCP, abduction
  // sensor 17 is the index abduction joint (13), fingertip 19 is the thumb IP.
  Index j;
  c.row(0).maxCoeff(&j);
  CHECK(j == 0);
  c.row(17).maxCoeff(&j);
  CHECK(j == 13);
  c.row(19).maxCoeff(&j);
  CHECK(j == 18);
}

TEST_CASE("trajectories: shape, limits, determinism, validation") {
  Matrix t1 = synth::generate_trajectory(11, 10.0);
  CHECK(t1.rows() == 200);  // 10 s at 20 Hz
  CHECK(t1.cols() == kJointCount);

  const auto& lims = synth::joint_limits();
  for (Index i = 0; i < t1.rows(); ++i)
    for (int j = 0; j < kJointCount; ++j) {
      CHECK(t1(i, j) >= lims[j].lo);
      CHECK(t1(i, j) <= lims[j].hi);
    }

  Matrix t2 = synth::generate_trajectory(11, 10.0);
  CHECK((t1 - t2).cwiseAbs().maxCoeff() == 0.0);
  Matrix t3 = synth::generate_trajectory(12, 10.0);
  CHECK((t1 - t3).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(synth::generate_trajectory(1, 1.0), GloveError);
  CHECK_THROWS_AS(synth::generate_trajectory(1, 10.0, 0.0), GloveError);
}

TEST_CASE("high smoothness limit flattens the trajectory") {
  // smoothness divides every component frequency; at 1e6 each sinusoid moves
  // through ~1e-4 of a cycle over 10 s, so the series is nearly constant.
  Matrix t = synth::generate_trajectory(21, 10.0, 1e6);
  for (int j = 0; j < kJointCount; ++j) {
    const Scalar range = t.col(j).maxCoeff() - t.col(j).minCoeff();
    CHECK(range < 0.05);  // degrees
  }
}

TEST_CASE("smoothness shrinks mean step size monotonically") {
  auto mean_step = [](const Matrix& t) {
    Scalar acc = 0;
    for (Index i = 1; i < t.rows(); ++i) acc += (t.row(i) - t.row(i - 1)).cwiseAbs().sum();
    return acc / Scalar(t.rows() - 1);
  };
  const Scalar rough = mean_step(synth::generate_trajectory(31, 20.0, 0.5));
  const Scalar mid = mean_step(synth::generate_trajectory(31, 20.0, 2.0));
  const Scalar smooth = mean_step(synth::generate_trajectory(31, 20.0, 8.0));
  CHECK(rough > mid);
  CHECK(mid > smooth);
}

TEST_CASE("simulate_sensors: shapes, timestamps, quaternion norms") {
  Matrix traj = synth::generate_trajectory(41, 5.0);
  synth::GaugeModel g;
  g.noise_std = 0.003;
  auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 7);
  REQUIRE(static_cast<Index>(sim.frames.size()) == traj.rows());
  CHECK((sim.angles - traj).cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < traj.rows(); ++i) {
    CHECK(sim.frames[i].timestamp_ms == 50 * i);
    CHECK(std::abs(sim.frames[i].quat_hand.norm() - 1.0) < 1e-12);
    CHECK(std::abs(sim.frames[i].quat_forearm.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("zero motion, zero drift, zero noise: constant sensor outputs") {
  Matrix traj(60, kJointCount);
  for (Index i = 0; i < traj.rows(); ++i)
    for (int j = 0; j < kJointCount; ++j) traj(i, j) = 10.0 + j;
  synth::GaugeModel g;  // drift and noise default to zero
  auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 1, 0.0);
  for (const auto& f : sim.frames)
    CHECK((f.hsy - sim.frames[0].hsy).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sim.clipped == 0);
}

TEST_CASE("drift accumulates linearly in time") {
  Matrix traj = Matrix::Zero(41, kJointCount);
  synth::GaugeModel g;
  g.drift_per_s = 0.01;
  auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 1, 0.0);
  // Zero angles produce zero strain, so the response is pure drift.
  CHECK(sim.frames[0].hsy(0) == 0.0);
  CHECK(sim.frames[40].hsy(12) == doctest::Approx(0.01 * 2.0).epsilon(1e-12));
}

TEST_CASE("monotone joint increase drives a monotone coupled-sensor response") {
  Matrix traj = Matrix::Zero(80, kJointCount);
  for (Index i = 0; i < traj.rows(); ++i) traj(i, 0) = Scalar(i);  // pinky MCP ramp
  synth::GaugeModel g;
  auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 1, 0.0);
  for (Index i = 1; i < traj.rows(); ++i)
    CHECK(sim.frames[i].hsy(0) > sim.frames[i - 1].hsy(0));
}

TEST_CASE("doubling a joint's excursion grows its sensor's peak-to-peak response") {
  auto peak_to_peak = [](Scalar amp) {
    Matrix traj = Matrix::Zero(100, kJointCount);
    for (Index i = 0; i < traj.rows(); ++i)
      traj(i, 4) = amp * 0.5 * (1 + std::sin(2 * kPi * Scalar(i) / 50.0));  // ring MCP
    synth::GaugeModel g;
    auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 1, 0.0);
    Scalar lo = sim.frames[0].hsy(3), hi = lo;
    for (const auto& f : sim.frames) {
      lo = std::min(lo, f.hsy(3));
      hi = std::max(hi, f.hsy(3));
    }
    return hi - lo;
  };
  CHECK(peak_to_peak(60.0) > peak_to_peak(30.0));
}

TEST_CASE("noiseless simulation is deterministic and Lipschitz in the trajectory") {
  Matrix traj = synth::generate_trajectory(51, 5.0);
  synth::GaugeModel g;
  Matrix coupling = synth::standard_coupling();
  auto s1 = synth::simulate_sensors(traj, g, coupling, 9, 0.0);
  auto s2 = synth::simulate_sensors(traj, g, coupling, 10, 0.0);  // seed must not matter
  for (size_t i = 0; i < s1.frames.size(); ++i)
    CHECK((s1.frames[i].hsy - s2.frames[i].hsy).cwiseAbs().maxCoeff() == 0.0);

  // |response(a) - response(b)| <= slope_max * pct_per_deg * ||coupling||_inf * ||a-b||_inf.
  const Scalar lip = g.slope_low * 0.3 * coupling.cwiseAbs().rowwise().sum().maxCoeff();
  nn::Rng rng(52);
  std::uniform_real_distribution<Scalar> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix pert = traj;
    Scalar dinf = 0;
    for (Index i = 0; i < pert.rows(); ++i)
      for (Index j = 0; j < pert.cols(); ++j) {
        const Scalar d = 2.0 * u(rng);
        pert(i, j) += d;
        dinf = std::max(dinf, std::abs(d));
      }
    auto sp = synth::simulate_sensors(pert, g, coupling, 9, 0.0);
    Scalar out_inf = 0;
    for (size_t i = 0; i < sp.frames.size(); ++i)
      out_inf = std::max(out_inf, (sp.frames[i].hsy - s1.frames[i].hsy).cwiseAbs().maxCoeff());
    CHECK(out_inf <= lip * dinf + 1e-12);
  }
}

TEST_CASE("strain outside the gauge domain is clipped and counted") {
  Matrix traj = Matrix::Zero(10, kJointCount);
  traj.col(0).setConstant(10000.0);  // far beyond any limit the generator obeys
  synth::GaugeModel g;
  auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 1, 0.0);
  CHECK(sim.clipped > 0);
  for (const auto& f : sim.frames)
    CHECK(f.hsy.maxCoeff() <= g.response(synth::kStrainMaxPct) + 1e-12);
}

TEST_CASE("simulation rejects wrong shapes") {
  synth::GaugeModel g;
  CHECK_THROWS_AS(synth::simulate_sensors(Matrix::Zero(10, 21), g, synth::standard_coupling(), 1),
                  GloveError);
  CHECK_THROWS_AS(synth::simulate_sensors(Matrix::Zero(10, kJointCount), g, Matrix::Zero(5, 5), 1),
                  GloveError);
}

TEST_CASE("wrist rows reach the IMU channels through the simulated quaternions") {
  Matrix traj = Matrix::Zero(100, kJointCount);
  for (Index i = 0; i < traj.rows(); ++i) {
    traj(i, 19) = 30.0 * std::sin(2 * kPi * Scalar(i) / 40.0);  // flex
    traj(i, 20) = 10.0;                                         // abd
    traj(i, 21) = -25.0;                                        // sup
  }
  synth::GaugeModel g;
  auto sim = synth::simulate_sensors(traj, g, synth::standard_coupling(), 3, 0.0);
  for (Index i = 0; i < traj.rows(); ++i) {
    auto wa = signal::relative_wrist_angles(sim.frames[i].quat_hand, sim.frames[i].quat_forearm);
    CHECK(std::abs(wa.flex - traj(i, 19)) < 1e-6);
    CHECK(std::abs(wa.abd - traj(i, 20)) < 1e-6);
    CHECK(std::abs(wa.sup - traj(i, 21)) < 1e-6);
  }
}

}  // TEST_SUITE("synth")
