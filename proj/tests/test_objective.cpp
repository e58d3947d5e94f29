#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "orderlens/objective.hpp"

using namespace orderlens;

namespace {

std::vector<double> unit_random(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double n = 0;
  for (auto& x : v) {
    x = rng.uniform(-1.0, 1.0);
    n += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

Matrix random_unit_rows(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = unit_random(rng, d);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

MnrBatch identical_batch(std::vector<std::string> gold, std::size_t d = 8) {
  Matrix q(gold.size(), d), docs(gold.size(), d);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    q(i, 0) = 1.0;
    docs(i, 0) = 1.0;
  }
  return MnrBatch::validated(q, docs, std::move(gold));
}

// Random gold ids over a small alphabet so duplicates are common.
std::vector<std::string> random_gold(Rng& rng, std::size_t n) {
  std::vector<std::string> g(n);
  for (auto& x : g) x = std::string(1, static_cast<char>('A' + rng.below(4)));
  return g;
}

}  // namespace

TEST_SUITE("objective") {
  TEST_CASE("mask examples") {
    std::vector<std::string> abc{"A", "B", "C"};
    auto m = build_mask(abc);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(m(i, j));

    std::vector<std::string> aa{"A", "A"};
    auto m2 = build_mask(aa);
    CHECK(m2(0, 0));
    CHECK_FALSE(m2(0, 1));
    CHECK_FALSE(m2(1, 0));
    CHECK(m2(1, 1));

    std::vector<std::string> abac{"A", "B", "A", "C"};
    auto m3 = build_mask(abac);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        bool expect = !((i == 0 && j == 2) || (i == 2 && j == 0));
        CHECK(m3(i, j) == expect);
      }
  }

  TEST_CASE("uniform logits give ln n and ln 3 with duplicates") {
    auto l4 = mnr_loss(identical_batch({"A", "B", "C", "D"}), {20.0});
    for (double x : l4.per_example) CHECK(std::abs(x - std::log(4.0)) <= 1e-12);
    CHECK(std::abs(l4.loss - std::log(4.0)) <= 1e-12);

    auto l3 = mnr_loss(identical_batch({"A", "A", "B", "B"}), {20.0});
    for (double x : l3.per_example) CHECK(std::abs(x - std::log(3.0)) <= 1e-12);
  }

  TEST_CASE("mask equals column deletion on random batches") {
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.below(7);
      const std::size_t d = 2 + rng.below(8);
      auto gold = random_gold(rng, n);
      MnrBatch b{random_unit_rows(rng, n, d), random_unit_rows(rng, n, d), gold};
      const double s = rng.uniform(1.0, 30.0);
      auto got = mnr_loss(b, {s});
      auto want = oracle::mnr_by_deletion(oracle::to_rows(b.query_embeddings),
                                          oracle::to_rows(b.doc_embeddings), gold, s);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got.per_example[i] - want[i]));
    }
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("loss gradient matches central differences") {
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t n = 4, d = 8;
      std::vector<std::string> gold = trial % 2 ? std::vector<std::string>{"A", "B", "A", "C"}
                                                : std::vector<std::string>{"A", "B", "C", "D"};
      MnrBatch b{random_unit_rows(rng, n, d), random_unit_rows(rng, n, d), gold};
      const LossConfig cfg{trial == 4 ? 100.0 : 20.0};
      auto g = mnr_loss_grad(b, cfg);
      double worst = 0.0;
      std::size_t probes = 0;
      for (Matrix* target : {&b.query_embeddings, &b.doc_embeddings}) {
        const Matrix& analytic = target == &b.query_embeddings ? g.query : g.doc;
        for (std::size_t k = 0; k < n * d; ++k) {
          double numeric = oracle::central_difference(target->data(), k, 1e-4,
                                                      [&] { return mnr_loss(b, cfg).loss; });
          worst = std::max(worst, oracle::relative_error(analytic.data()[k], numeric));
          ++probes;
        }
      }
      CHECK(probes >= 50);
      CHECK(worst <= 1e-4);
    }
  }

  TEST_CASE("combined evaluation agrees with the separate calls") {
    Rng rng(5);
    MnrBatch b{random_unit_rows(rng, 6, 8), random_unit_rows(rng, 6, 8), random_gold(rng, 6)};
    auto both = mnr_loss_and_grad(b, {20.0});
    auto l = mnr_loss(b, {20.0});
    auto g = mnr_loss_grad(b, {20.0});
    CHECK(both.value.per_example == l.per_example);
    CHECK(both.grad.query == g.query);
    CHECK(both.grad.doc == g.doc);
  }

  TEST_CASE("permuting rows permutes per-example losses") {
    Rng rng(17);
    const std::size_t n = 6, d = 8;
    MnrBatch b{random_unit_rows(rng, n, d), random_unit_rows(rng, n, d), random_gold(rng, n)};
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    MnrBatch p{Matrix(n, d), Matrix(n, d), std::vector<std::string>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(b.query_embeddings.row(perm[i]).begin(), d, p.query_embeddings.row(i).begin());
      std::copy_n(b.doc_embeddings.row(perm[i]).begin(), d, p.doc_embeddings.row(i).begin());
      p.gold_ids[i] = b.gold_ids[perm[i]];
    }
    auto lb = mnr_loss(b, {20.0});
    auto lp = mnr_loss(p, {20.0});
    for (std::size_t i = 0; i < n; ++i)
      CHECK(lp.per_example[i] == doctest::Approx(lb.per_example[perm[i]]).epsilon(1e-13));
    CHECK(lp.loss == doctest::Approx(lb.loss).epsilon(1e-13));
  }

  TEST_CASE("higher scale lowers the loss when positives already win") {
    // Query i equals doc i; docs are orthonormal so every positive logit wins.
    // Beyond s = 20 the loss underflows to exactly 0 in double.
    const std::size_t n = 4;
    Matrix e(n, n);
    for (std::size_t i = 0; i < n; ++i) e(i, i) = 1.0;
    auto b = MnrBatch::validated(e, e, {"A", "B", "C", "D"});
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {1.0, 5.0, 10.0, 20.0}) {
      double l = mnr_loss(b, {s}).loss;
      CHECK(l < prev);
      CHECK(l > 0.0);
      prev = l;
    }
  }

  TEST_CASE("saturated softmax has vanishing gradient and no overflow") {
    const std::size_t n = 3;
    Matrix q(n, 2), d(n, 2);
    // positive logit +s, negatives -s
    q(0, 0) = 1;
    d(0, 0) = 1;
    q(1, 0) = -1;
    d(1, 0) = -1;
    q(2, 0) = 1;
    d(2, 0) = 1;
    auto b = MnrBatch::validated(q, d, {"A", "B", "A"});
    auto eval = mnr_loss_and_grad(b, {1000.0});
    CHECK(std::isfinite(eval.value.loss));
    double gnorm = l2_norm(eval.grad.query.data()) + l2_norm(eval.grad.doc.data());
    CHECK(gnorm < 1e-200);
  }

  TEST_CASE("[A,A] couples only the diagonal pairs") {
    Rng rng(3);
    MnrBatch b{random_unit_rows(rng, 2, 4), random_unit_rows(rng, 2, 4), {"A", "A"}};
    auto g = mnr_loss_grad(b, {20.0});
    // Each row's softmax has only the positive column, so p_ii = 1 and every
    // gradient term vanishes.
    for (double x : g.query.data()) CHECK(x == 0.0);
    for (double x : g.doc.data()) CHECK(x == 0.0);
    auto l = mnr_loss(b, {20.0});
    CHECK(std::abs(l.per_example[0]) <= 1e-15);
  }

  TEST_CASE("adding an identical duplicate leaves original rows unchanged") {
    Rng rng(8);
    const std::size_t n = 4, d = 8;
    MnrBatch b{random_unit_rows(rng, n, d), random_unit_rows(rng, n, d), {"A", "B", "C", "D"}};
    MnrBatch dup{Matrix(n + 1, d), Matrix(n + 1, d), b.gold_ids};
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(b.query_embeddings.row(i).begin(), d, dup.query_embeddings.row(i).begin());
      std::copy_n(b.doc_embeddings.row(i).begin(), d, dup.doc_embeddings.row(i).begin());
    }
    std::copy_n(b.query_embeddings.row(1).begin(), d, dup.query_embeddings.row(n).begin());
    std::copy_n(b.doc_embeddings.row(1).begin(), d, dup.doc_embeddings.row(n).begin());
    dup.gold_ids.push_back("B");
    auto lb = mnr_loss(b, {20.0});
    auto ld = mnr_loss(dup, {20.0});
    // Row 1 sees the same candidate set; the others gain one extra negative.
    CHECK(ld.per_example[1] == doctest::Approx(lb.per_example[1]).epsilon(1e-13));
    for (std::size_t i : {0u, 2u, 3u}) CHECK(ld.per_example[i] >= lb.per_example[i]);
  }

  TEST_CASE("per-example losses are positive") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
      MnrBatch b{random_unit_rows(rng, 5, 6), random_unit_rows(rng, 5, 6), random_gold(rng, 5)};
      for (double x : mnr_loss(b, {20.0}).per_example) CHECK(x >= 0.0);
    }
  }

  TEST_CASE("contract violations") {
    MnrBatch empty;
    CHECK_THROWS_AS(mnr_loss(empty, {20.0}), ContractViolation);
    Rng rng(1);
    MnrBatch b{random_unit_rows(rng, 3, 4), random_unit_rows(rng, 2, 4), {"A", "B", "C"}};
    CHECK_THROWS_AS(mnr_loss(b, {20.0}), ContractViolation);
    MnrBatch ok{random_unit_rows(rng, 2, 4), random_unit_rows(rng, 2, 4), {"A", "B"}};
    CHECK_THROWS_AS(mnr_loss(ok, {0.0}), ContractViolation);
    Matrix notunit(2, 4, 1.0);
    CHECK_THROWS_AS(MnrBatch::validated(notunit, notunit, {"A", "B"}), ContractViolation);
    CHECK(LossConfig::from_temperature(0.05).scale == doctest::Approx(20.0));
  }
}
