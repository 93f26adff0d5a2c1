#include <doctest.h>

#include <cmath>

#include "uavpfl/channel.hpp"

using namespace uavpfl;

// Reference numbers from oracles/channel_oracle.py.
TEST_CASE("nadir link") {
  const auto cfg = default_config();
  const auto t = air_to_ground_terms(100.0, cfg);
  CHECK(t.elevation_deg == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(t.p_los == doctest::Approx(0.9997853460579836).epsilon(1e-12));
  CHECK(t.path_loss_los_db == doctest::Approx(81.468383135163).epsilon(1e-12));
  CHECK(t.path_loss_nlos_db == doctest::Approx(101.468383135163).epsilon(1e-12));
  CHECK(std::abs(t.p_los - 0.99979) < 1e-5);
  CHECK(std::abs(t.path_loss_los_db - 81.46) < 0.01);

  const auto g = d2u_gain(100.0, cfg);
  CHECK(g.gain_db == doctest::Approx(-81.47267621400333).epsilon(1e-12));
  CHECK(std::abs(g.gain_db + 81.47) < 0.01);
  CHECK(g.gain_linear == doctest::Approx(std::pow(10.0, g.gain_db / 10.0)).epsilon(1e-15));
}

TEST_CASE("coverage-edge link is weaker than nadir") {
  const auto cfg = default_config();
  const double d = std::hypot(200.0, 100.0);
  const auto t = air_to_ground_terms(d, cfg);
  CHECK(t.elevation_deg == doctest::Approx(26.56505117707799).epsilon(1e-12));
  CHECK(t.p_los == doctest::Approx(0.3930226782254793).epsilon(1e-12));
  const auto g = d2u_gain(d, cfg);
  CHECK(g.gain_db == doctest::Approx(-100.5976296140136).epsilon(1e-12));
  CHECK(g.gain_db < d2u_gain(100.0, cfg).gain_db);
}

TEST_CASE("domain errors") {
  const auto cfg = default_config();
  CHECK_THROWS_AS(d2u_gain(50.0, cfg), ChannelDomainError);
  CHECK_THROWS_AS(u2u_gain(0.0, cfg), ChannelDomainError);
  CHECK_THROWS_AS(u2u_gain(-3.0, cfg), ChannelDomainError);
  CHECK_THROWS_AS(LinkGain::from_linear(0.0), ChannelDomainError);
}

TEST_CASE("free-space U2U gain") {
  const auto cfg = default_config();
  CHECK(u2u_gain(1000.0, cfg).gain_linear == doctest::Approx(7.07945784384138e-10).epsilon(1e-12));
  CHECK(u2u_gain(1.0, cfg).gain_linear == doctest::Approx(std::pow(10.0, -3.15)).epsilon(1e-14));
  for (double d : {1.0, 37.0, 600.0, 1234.5}) {
    CHECK(u2u_gain(d / 2, cfg).gain_linear ==
          doctest::Approx(4.0 * u2u_gain(d, cfg).gain_linear).epsilon(1e-13));
    const auto g = u2u_gain(d, cfg);
    CHECK(g.gain_linear == doctest::Approx(db_to_linear(g.gain_db)).epsilon(1e-13));
  }
}

TEST_CASE("Shannon rate") {
  const auto cfg = default_config();
  const double n0 = noise_psd_watts(cfg);
  CHECK(n0 == doctest::Approx(std::pow(10.0, -20.4)).epsilon(1e-14));
  CHECK(dbm_to_watts(23.0) == doctest::Approx(0.19952623149688797).epsilon(1e-14));

  const double share = 16e6;
  const auto unit_snr = LinkGain::from_linear(share * n0 / 2.0);
  CHECK(link_rate(2.0, unit_snr, share, cfg) == doctest::Approx(share).epsilon(1e-14));

  const auto tiny = LinkGain::from_linear(1e-300);
  CHECK(link_rate(1.0, tiny, share, cfg) < 1e-80);

  const auto nadir = d2u_gain(100.0, cfg);
  const double rate = link_rate(dbm_to_watts(23.0), nadir, 80e6 / 5, cfg);
  CHECK(rate == doctest::Approx(231133477.43138945).epsilon(1e-11));
  CHECK(cfg.base_model_bits / rate == doctest::Approx(0.005849433907302904).epsilon(1e-11));
}

TEST_CASE("monotonicity") {
  const auto cfg = default_config();
  double prev_gain = INFINITY;
  double prev_los = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double d = 100.0 + 900.0 * i / 999.0;
    const auto t = air_to_ground_terms(d, cfg);
    CHECK(t.p_los + t.p_nlos == 1.0);
    const double g = d2u_gain(d, cfg).gain_db;
    CHECK(g < prev_gain);
    CHECK(t.p_los < prev_los);  // elevation falls as d grows
    prev_gain = g;
    prev_los = t.p_los;
  }

  const auto g = d2u_gain(150.0, cfg);
  double prev = 0.0;
  for (double p : {0.01, 0.1, 1.0, 5.0, 50.0}) {
    const double r = link_rate(p, g, 1e6, cfg);
    CHECK(r > prev);
    prev = r;
  }
  prev = 0.0;
  for (double lin : {1e-14, 1e-12, 1e-10, 1e-8}) {
    const double r = link_rate(0.2, LinkGain::from_linear(lin), 1e6, cfg);
    CHECK(r > prev);
    prev = r;
  }
}
