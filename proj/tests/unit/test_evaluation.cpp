#include "doctest.h"

#include "dhbv/data/csv.hpp"
#include "dhbv/error.hpp"
#include "dhbv/evaluation/composite.hpp"
#include "dhbv/evaluation/metrics.hpp"
#include "dhbv/evaluation/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace dhbv;
using namespace dhbv::eval;
using data::Date;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("dhbv_eval_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

data::BasinSimulation make_sim(const std::string& id, const Date& first, const std::vector<double>& q,
                               double base_fraction, const std::vector<double>& et) {
    data::BasinSimulation s;
    s.basin_id = id;
    for (std::size_t i = 0; i < q.size(); ++i) s.dates.push_back(first.plus_days(static_cast<std::int64_t>(i)));
    s.columns["Q_routed"] = q;
    s.columns["Q"] = q;
    std::vector<double> q2(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) q2[i] = base_fraction * q[i];
    s.columns["Q2"] = q2;
    s.columns["E_T"] = et;
    return s;
}

data::ObservationSeries make_obs(const Date& first, const std::vector<double>& q) {
    data::ObservationSeries o;
    for (std::size_t i = 0; i < q.size(); ++i) {
        o.dates.push_back(first.plus_days(static_cast<std::int64_t>(i)));
        o.q.push_back(q[i]);
        o.mask.push_back(std::isnan(q[i]) ? 0 : 1);
    }
    return o;
}

}  // namespace

TEST_CASE("nse fixed cases") {
    const std::vector<double> obs = {1, 2, 3};
    CHECK(nse(obs, obs) == 1.0);
    CHECK(nse(std::vector<double>{2, 2, 2}, obs) == 0.0);
    CHECK(nse(std::vector<double>{1, 2, 5}, obs) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(nse(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}), DataError);
    CHECK_THROWS_AS(nse(std::vector<double>{1}, std::vector<double>{1}), DataError);
    CHECK_THROWS_AS(nse(std::vector<double>{1, 2}, obs), std::invalid_argument);
}

TEST_CASE("nse skips missing observations") {
    const std::vector<double> obs = {1, kNaN, 2, 3};
    const std::vector<double> sim = {1, 100, 2, 5};
    CHECK(nse(sim, obs) == doctest::Approx(-1.0));
    CHECK(rmse(sim, obs) == doctest::Approx(std::sqrt(4.0 / 3.0)));
}

TEST_CASE("nse is unchanged when obs and error scale together") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng() % 50;
        const auto obs = random_series(rng, n, 0.0, 10.0);
        const auto noise = random_series(rng, n, -1.0, 1.0);
        const double a = std::uniform_real_distribution<double>(0.1, 20.0)(rng);
        std::vector<double> sim(n), obs_a(n), sim_a(n);
        for (std::size_t i = 0; i < n; ++i) {
            sim[i] = obs[i] + noise[i];
            obs_a[i] = a * obs[i];
            sim_a[i] = a * sim[i];
        }
        const double base = nse(sim, obs);
        CHECK(base <= 1.0);
        CHECK(nse(sim_a, obs_a) == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("pearson bounds and degenerate input") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_series(rng, 20, -5, 5);
        const auto y = random_series(rng, 20, -5, 5);
        const double r = pearson(x, y);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
    }
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DataError);
}

TEST_CASE("bfi_sim") {
    CHECK(bfi_sim(std::vector<double>{1, 1}, std::vector<double>{2, 4}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(bfi_sim(std::vector<double>{2, 3}, std::vector<double>{2, 3}) == 1.0);
    CHECK(bfi_sim(std::vector<double>{0, 0}, std::vector<double>{2, 3}) == 0.0);
    CHECK_THROWS_AS(bfi_sim(std::vector<double>{0, 0}, std::vector<double>{0, 0}), DataError);

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        const auto q0 = random_series(rng, n, 0, 5);
        const auto q1 = random_series(rng, n, 0, 5);
        const auto q2 = random_series(rng, n, 0, 5);
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = q0[i] + q1[i] + q2[i];
        const double b = bfi_sim(q2, q);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }
}

TEST_CASE("bfi spatial correlation") {
    const std::vector<double> a = {0.2, 0.4, 0.5, 0.9};
    CHECK(bfi_spatial_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bfi_spatial_correlation(a, std::vector<double>{0.9, 0.5, 0.4, 0.2}) < -0.9);
    CHECK(bfi_spatial_correlation(a, std::vector<double>{-0.2, -0.4, -0.5, -0.9}) ==
          doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(bfi_spatial_correlation(a, std::vector<double>{0.3, 0.35, 0.6, 0.8}) ==
          doctest::Approx(0.9505129685990104).epsilon(1e-12));

    // The NSE filter drops the last basin, leaving three identical pairs.
    const std::vector<double> ref = {0.2, 0.4, 0.5, 0.1};
    const std::vector<double> nses = {0.9, 0.8, 0.7, 0.3};
    CHECK(bfi_spatial_correlation(a, ref, nses) == doctest::Approx(1.0));
    CHECK_THROWS_AS(bfi_spatial_correlation(a, ref, std::vector<double>{0.9, 0.8, 0.1, 0.3}), DataError);
    CHECK_THROWS_AS(bfi_spatial_correlation(std::vector<double>{0.2, 0.3}, std::vector<double>{0.2, 0.3}), DataError);
    // Missing references are skipped.
    CHECK_THROWS_AS(bfi_spatial_correlation(a, std::vector<double>{0.2, kNaN, kNaN, 0.1}), DataError);
}

TEST_CASE("median") {
    CHECK(median({0.6, 0.8, 0.7}) == 0.7);
    CHECK(median({0.4}) == 0.4);
    CHECK(median({1, 4, 2, 3}) == 2.5);
    CHECK_THROWS(median({}));
}

TEST_CASE("8-day periods restart each January 1") {
    CHECK(period_of(Date{2001, 1, 1}).start == Date{2001, 1, 1});
    CHECK(period_of(Date{2001, 1, 12}).start == Date{2001, 1, 9});
    CHECK(period_of(Date{2001, 1, 12}).length == 8);
    const auto last = period_of(Date{2001, 12, 31});
    CHECK(last.start == Date{2001, 12, 27});
    CHECK(last.length == 5);
    const auto leap = period_of(Date{2000, 12, 31});
    CHECK(leap.start == Date{2000, 12, 26});
    CHECK(leap.length == 6);
}

TEST_CASE("composites of fixed series") {
    std::vector<double> constant(365 * 2, 2.0);
    for (const auto& c : et_8day_composite(constant, Date{2001, 1, 1})) CHECK(c.mean == 2.0);
    CHECK(et_8day_composite(constant, Date{2001, 1, 1}).size() == 46 * 2);

    std::vector<double> steps(16, 1.0);
    for (std::size_t i = 8; i < 16; ++i) steps[i] = 3.0;
    const auto c = et_8day_composite(steps, Date{2001, 1, 1});
    REQUIRE(c.size() == 2);
    CHECK(c[0].mean == 1.0);
    CHECK(c[1].mean == 3.0);
    CHECK(c[1].start == Date{2001, 1, 9});

    // Partial periods at either end are dropped.
    const auto shifted = et_8day_composite(steps, Date{2001, 1, 3});
    REQUIRE(shifted.size() == 1);
    CHECK(shifted[0].start == Date{2001, 1, 9});
    CHECK(shifted[0].mean == doctest::Approx((2.0 * 1 + 6.0 * 3) / 8.0));
}

TEST_CASE("composite of a period-constant series is exact") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Date first = Date{1998, 1, 1}.plus_days(static_cast<std::int64_t>(rng() % 800));
        const std::size_t n = 30 + rng() % 900;
        std::map<Date, double> level;
        std::vector<double> daily(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = period_of(first.plus_days(static_cast<std::int64_t>(i)));
            if (!level.contains(p.start)) level[p.start] = std::uniform_real_distribution<double>(0, 6)(rng);
            daily[i] = level[p.start];
        }
        for (const auto& c : et_8day_composite(daily, first)) {
            CHECK(c.mean == doctest::Approx(level.at(c.start)).epsilon(1e-14));
        }
    }
}

TEST_CASE("et metrics") {
    auto periods = [](const std::vector<double>& means) {
        std::vector<Composite> out;
        Date d{2003, 1, 1};
        for (double m : means) {
            Composite c = period_of(d);
            c.mean = m;
            out.push_back(c);
            d = d.plus_days(c.length);
        }
        return out;
    };
    const auto ref = periods({1.2, 1.8, 1.0, 2.6});
    auto same = et_metrics(ref, ref);
    REQUIRE(same);
    CHECK(same->r == doctest::Approx(1.0));
    CHECK(same->rmse == 0.0);

    // A constant of 4 mm per period on every total.
    auto shifted = et_metrics(periods({1.7, 2.3, 1.5, 3.1}), ref);
    REQUIRE(shifted);
    CHECK(shifted->r == doctest::Approx(1.0));
    CHECK(shifted->rmse == doctest::Approx(4.0).epsilon(1e-12));

    auto hand = et_metrics(periods({1.0, 2.0, 1.5, 3.0}), ref);
    REQUIRE(hand);
    CHECK(hand->r == doctest::Approx(0.9368050419569401).epsilon(1e-12));
    CHECK(hand->rmse == doctest::Approx(2.8).epsilon(1e-12));
    CHECK(hand->periods == 4);
    CHECK(hand->mean_ref == doctest::Approx(1.65));

    std::vector<std::string> warnings;
    CHECK_FALSE(et_metrics(periods({1.0, 2.0}), ref, &warnings, "b7"));
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("b7") != std::string::npos);
}

TEST_CASE("et reference files") {
    const auto dir = scratch_dir("etref");
    EtReference ref;
    Composite c = period_of(Date{2004, 1, 9});
    c.mean = 1.25;
    ref["01"].push_back(c);
    write_et_reference(dir / "et.csv", ref);
    const auto back = read_et_reference(dir / "et.csv");
    REQUIRE(back.at("01").size() == 1);
    CHECK(back.at("01")[0].mean == 1.25);
    CHECK(back.at("01")[0].start == Date{2004, 1, 9});

    std::ofstream(dir / "bad.csv") << "basin_id,period_start,et\n01,2004-01-10,1.0\n";
    CHECK_THROWS_AS(read_et_reference(dir / "bad.csv"), DataError);
}

TEST_CASE("evaluate, summarize and report") {
    const Date first{2001, 1, 1};
    std::mt19937_64 rng(3);
    std::vector<BasinMetrics> metrics;
    EtReference et_ref;
    for (int b = 0; b < 4; ++b) {
        const auto q = random_series(rng, 64, 0.5, 4.0);
        const auto et = random_series(rng, 64, 0.0, 3.0);
        const std::string id = "0" + std::to_string(b);
        const auto sim = make_sim(id, first, q, 0.2 + 0.1 * b, et);
        et_ref[id] = et_8day_composite(et, first);
        // Observations start earlier and have a gap; alignment is by date.
        std::vector<double> obs(70, 1.0);
        for (std::size_t i = 0; i < q.size(); ++i) obs[i + 6] = q[i];
        obs[20] = kNaN;
        auto m = evaluate_basin(sim, make_obs(first.plus_days(-6), obs), 40.0 + b, 0.2 + 0.1 * b, &et_ref[id]);
        CHECK(m.nse == 1.0);
        CHECK(m.observed_days == 63);
        CHECK(*m.bfi_sim == doctest::Approx(0.2 + 0.1 * b));
        CHECK(*m.et_r == doctest::Approx(1.0));
        CHECK(*m.et_rmse == 0.0);
        metrics.push_back(m);
    }
    metrics[3].nse = 0.4;
    const auto s = summarize(metrics);
    CHECK(s.n_basins == 4);
    CHECK(s.nse_median == 1.0);
    CHECK(*s.bfi_spatial_r == doctest::Approx(1.0));
    CHECK(s.bfi_basins == 4);
    CHECK(*s.et_r_median == doctest::Approx(1.0));
    CHECK(s.et_mean_spatial_r.has_value());
    const auto filtered = summarize(metrics, {.nse_filter = true});
    CHECK(filtered.bfi_basins == 3);

    const auto cdf = nse_cdf(metrics);
    REQUIRE(cdf.size() == 4);
    for (std::size_t i = 1; i < cdf.size(); ++i) {
        CHECK(cdf[i].first >= cdf[i - 1].first);
        CHECK(cdf[i].second > cdf[i - 1].second);
    }
    CHECK(cdf.back().second == 1.0);

    const auto dir = scratch_dir("report");
    write_report(dir, metrics, s);
    const auto table = data::read_csv(dir / "per_basin_metrics.csv");
    CHECK(table.rows.size() == 4);
    CHECK(table.find("et_r").has_value());
    CHECK(table.find("bfi_ref").has_value());
    CHECK(slurp(dir / "summary.json").find("\"nse_median\": 1.0") != std::string::npos);
    CHECK(data::read_csv(dir / "nse_cdf.csv").rows.size() == 4);

    // Without an ET reference the ET columns disappear.
    for (auto& m : metrics) {
        m.et_r.reset();
        m.et_rmse.reset();
        m.mean_et_ref.reset();
    }
    write_report(dir, metrics, summarize(metrics));
    const auto plain = data::read_csv(dir / "per_basin_metrics.csv");
    CHECK_FALSE(plain.find("et_r").has_value());
    CHECK(plain.find("mean_et").has_value());
    CHECK(slurp(dir / "summary.json").find("et_r_median") == std::string::npos);
}

TEST_CASE("single basin summary and errors") {
    BasinMetrics m;
    m.basin_id = "x";
    m.nse = 0.42;
    const auto s = summarize({m});
    CHECK(s.nse_median == 0.42);
    CHECK_FALSE(s.bfi_spatial_r.has_value());
    CHECK_THROWS_AS(summarize({}), DataError);

    const auto sim = make_sim("z", Date{2001, 1, 1}, {1, 2, 3}, 0.5, {1, 1, 1});
    CHECK_THROWS_AS(evaluate_basin(sim, make_obs(Date{2001, 1, 1}, {2, 2, 2}), 0, std::nullopt, nullptr), DataError);
}
