#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ldm/acquisition.hpp"
#include "ldm/verify.hpp"

using namespace ldm;

namespace {

const std::vector<std::vector<double>> kFeatures{{1, 0}, {0.8, 0.6}, {0, 1}, {-0.6, 0.8}, {0.6, -0.8}};
const std::vector<double> kLdm{0.05, 0.1, 0.2, 0.3, 0.5};

// Second-pick probabilities written out by hand from the weighting and
// seeding formulas, for q = 2 on the fixture above.
std::vector<double> hand_second_pick() {
  // P_q = {0, 1}, L_q = 0.1. Complement etas: 1, 2, 4.
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0), e4 = std::exp(-4.0);
  const double z = e1 + e2 + e4;
  const std::vector<double> gamma{0.5, 0.5, e1 / z, e2 / z, e4 / z};
  // Cosine distance from point 0 = 1 - first coordinate (all unit vectors).
  std::vector<double> p2(5, 0.0);
  double total = 0.0;
  for (std::size_t i = 1; i < 5; ++i) {
    const double p = gamma[i] * (1.0 - kFeatures[i][0]);
    p2[i] = p * p;
    total += p2[i];
  }
  for (auto& v : p2) v /= total;
  return p2;
}

}  // namespace

TEST_CASE("strategy names") {
  for (auto s : {Strategy::LdmS, Strategy::Random, Strategy::Entropy, Strategy::Margin, Strategy::Coreset}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK(to_string(Strategy::LdmS) == "ldm-s");
  CHECK_THROWS_AS(parse_strategy("badge"), std::invalid_argument);
}

TEST_CASE("weights: hand-derived fixture") {
  const std::vector<double> ldm{0.1, 0.2, 0.4, 0.6};
  const auto w = compute_weights(ldm, 2);
  CHECK(w.threshold == 0.2);
  CHECK(w.q_partition == std::vector<std::size_t>{0, 1});
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0);
  CHECK(std::abs(w.gamma[0] - 0.5) <= 1e-9);
  CHECK(std::abs(w.gamma[1] - 0.5) <= 1e-9);
  CHECK(std::abs(w.gamma[2] - e1 / (e1 + e2)) <= 1e-9);
  CHECK(std::abs(w.gamma[3] - e2 / (e1 + e2)) <= 1e-9);
  CHECK(w.gamma[2] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(w.gamma[3] == doctest::Approx(0.2689).epsilon(1e-4));
}

TEST_CASE("weights: partitions each carry unit mass") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> ldm(n);
    for (auto& v : ldm) v = 1e-4 + (1.0 - 1e-4) * rng.uniform();
    const std::size_t q = 1 + rng.index(n - 1);
    const auto w = compute_weights(ldm, q);
    const std::set<std::size_t> in_q(w.q_partition.begin(), w.q_partition.end());
    REQUIRE(in_q.size() == q);
    double mq = 0.0, mc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w.gamma[i] > 0.0);
      (in_q.count(i) ? mq : mc) += w.gamma[i];
      if (in_q.count(i)) CHECK(w.gamma[i] == doctest::Approx(1.0 / static_cast<double>(q)));
    }
    CHECK(std::abs(mq - 1.0) <= 1e-12);
    CHECK(std::abs(mc - 1.0) <= 1e-12);
  }
}

TEST_CASE("weights: equal LDMs give uniform partitions, ties go to lower index") {
  const std::vector<double> ldm(6, 0.3);
  const auto w = compute_weights(ldm, 2);
  CHECK(w.q_partition == std::vector<std::size_t>{0, 1});
  for (std::size_t i = 0; i < 2; ++i) CHECK(w.gamma[i] == doctest::Approx(0.5));
  for (std::size_t i = 2; i < 6; ++i) CHECK(w.gamma[i] == doctest::Approx(0.25));
}

TEST_CASE("weights: q equal to the pool") {
  const auto w = compute_weights(std::vector<double>{0.2, 0.1, 0.4}, 3);
  for (double g : w.gamma) CHECK(g == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("weights: errors") {
  CHECK_THROWS_AS(compute_weights(std::vector<double>{0.1, 0.2}, 3), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(std::vector<double>{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(std::vector<double>{0.0, 0.2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(std::vector<double>{0.1, 1.2}, 1), std::invalid_argument);
}

TEST_CASE("cosine distance") {
  const double a[] = {1, 0}, b[] = {0, 2}, c[] = {-3, 0}, z[] = {0, 0};
  CHECK(cosine_distance(a, a) == doctest::Approx(0.0));
  CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
  CHECK(cosine_distance(a, c) == doctest::Approx(2.0));
  CHECK(cosine_distance(a, z) == 1.0);
  CHECK(cosine_distance(z, z) == 1.0);
}

TEST_CASE("seeded selection: first pick and q = 1") {
  const auto feats = PointSet::from_rows(kFeatures);
  Rng rng(2);
  const std::vector<double> ldm{0.3, 0.1, 0.1, 0.5, 0.2};
  const auto one = ldm_seeded_select(feats, ldm, 1, rng);
  CHECK(one.indices == std::vector<std::size_t>{1});
  CHECK(one.strategy == Strategy::LdmS);
  for (int t = 0; t < 50; ++t) {
    const auto b = ldm_seeded_select(feats, ldm, 4, rng);
    CHECK(b.indices.front() == 1);
    CHECK(std::set<std::size_t>(b.indices.begin(), b.indices.end()).size() == 4);
  }
  CHECK_THROWS_AS(ldm_seeded_select(feats, ldm, 6, rng), std::invalid_argument);
}

TEST_CASE("seeded selection: duplicates of a selected feature are never drawn next") {
  const auto feats = PointSet::from_rows({{1, 0}, {1, 0}, {2, 0}, {0, 1}});
  const std::vector<double> ldm{0.1, 0.2, 0.2, 0.9};
  Rng rng(3);
  for (int t = 0; t < 200; ++t) CHECK(ldm_seeded_select(feats, ldm, 2, rng).indices[1] == 3);
}

TEST_CASE("seeded selection: degenerate features fall back to uniform with a warning") {
  const auto feats = PointSet::from_rows({{1, 0}, {1, 0}, {3, 0}});
  const std::vector<double> ldm{0.1, 0.2, 0.3};
  Rng rng(4);
  const auto b = ldm_seeded_select(feats, ldm, 3, rng);
  CHECK(b.indices.size() == 3);
  CHECK_FALSE(b.warnings.empty());
}

TEST_CASE("seeded selection: exact second-pick distribution") {
  const auto exact = verify::exact_second_pick_distribution(kFeatures, kLdm, 2);
  const auto hand = hand_second_pick();
  for (std::size_t i = 0; i < 5; ++i) CHECK(exact[i] == doctest::Approx(hand[i]).epsilon(1e-12));

  const auto feats = PointSet::from_rows(kFeatures);
  Rng rng(5);
  std::vector<std::size_t> counts(5, 0);
  for (int t = 0; t < 100000; ++t) ++counts[ldm_seeded_select(feats, kLdm, 2, rng).indices[1]];
  CHECK(counts[0] == 0);
  CHECK(verify::chi_square_p_value(counts, hand) > 0.01);
}

TEST_CASE("seeded selection: feature scale does not change the draws") {
  auto scaled = kFeatures;
  for (auto& row : scaled)
    for (auto& v : row) v *= 7.5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    CHECK(ldm_seeded_select(PointSet::from_rows(kFeatures), kLdm, 4, a).indices ==
          ldm_seeded_select(PointSet::from_rows(scaled), kLdm, 4, b).indices);
  }
}

TEST_CASE("random selection") {
  Rng rng(6);
  auto all = random_select(7, 7, rng).indices;
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(random_select(5, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(random_select(5, 6, rng), std::invalid_argument);

  std::vector<std::size_t> counts(10, 0);
  for (int t = 0; t < 100000; ++t) ++counts[random_select(10, 1, rng).indices[0]];
  CHECK(verify::chi_square_p_value(counts, std::vector<double>(10, 0.1)) > 0.01);
}

TEST_CASE("entropy") {
  CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(std::vector<double>{0.0, 1.0, 0.0}) == 0.0);
  CHECK(entropy(std::vector<double>{0.9, 0.1}) == doctest::Approx(0.3251).epsilon(1e-4));
}

TEST_CASE("entropy selection") {
  const std::vector<std::vector<double>> p{{1, 0, 0}, {0.5, 0.3, 0.2}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.5, 0.3, 0.2}};
  CHECK(entropy_select(p, 4).indices == std::vector<std::size_t>{2, 1, 3, 0});
  CHECK_THROWS_AS(entropy_select({{0.5, 0.6}}, 1), std::invalid_argument);
  CHECK_THROWS_AS(entropy_select({{-0.1, 1.1}}, 1), std::invalid_argument);
}

TEST_CASE("margin selection") {
  const std::vector<std::vector<double>> p{{1, 0, 0}, {0.5, 0.3, 0.2}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.3, 0.5, 0.2}};
  CHECK(margin_select(p, 4).indices == std::vector<std::size_t>{2, 1, 3, 0});
  CHECK(margin_select(p, 1).indices == std::vector<std::size_t>{2});
}

TEST_CASE("uncertainty selection is invariant to pool order up to ties") {
  Rng rng(7);
  std::vector<std::vector<double>> p;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> v{rng.uniform(), rng.uniform(), rng.uniform()};
    const double s = v[0] + v[1] + v[2];
    for (auto& x : v) x /= s;
    p.push_back(v);
  }
  std::vector<std::size_t> perm(p.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<std::vector<double>> shuffled;
  for (std::size_t i : perm) shuffled.push_back(p[i]);
  for (auto fn : {&entropy_select, &margin_select}) {
    const auto a = fn(p, 10).indices;
    auto b = fn(shuffled, 10).indices;
    for (auto& i : b) i = perm[i];
    CHECK(a == b);
  }
}

TEST_CASE("coreset selection") {
  const auto pool = PointSet::from_rows({{0}, {1}, {10}});
  CHECK(coreset_select(pool, PointSet::from_rows({{0}}), 1).indices == std::vector<std::size_t>{2});
  CHECK(coreset_select(pool, PointSet(1), 2).indices == std::vector<std::size_t>{0, 2});
  const auto all = coreset_select(pool, PointSet(1), 3).indices;
  CHECK(all == coreset_select(pool, PointSet(1), 3).indices);
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 3);
  CHECK_THROWS_AS(coreset_select(pool, PointSet::from_rows({{0, 1}}), 1), std::invalid_argument);
}

TEST_CASE("batch csv") {
  std::ostringstream out;
  write_batch_csv_header(out);
  SelectionBatch b{{1, 0}, Strategy::LdmS, {}};
  const std::vector<std::size_t> pool{40, 17};
  const std::vector<double> ldm{0.5, 0.25}, w{1.0, 0.5};
  write_batch_csv_rows(out, 3, b, pool, ldm, w);
  write_batch_csv_rows(out, 4, SelectionBatch{{0}, Strategy::Random, {}}, pool, {}, {});
  CHECK(out.str() ==
        "step,strategy,pool_index,ldm_value,weight,selection_order\n"
        "3,ldm-s,17,0.25,0.5,0\n"
        "3,ldm-s,40,0.5,1,1\n"
        "4,random,40,,,0\n");
}
