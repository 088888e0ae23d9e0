#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "antic/error.hpp"
#include "antic/infotheory.hpp"
#include "oracles.hpp"

using namespace antic;

namespace {

const std::vector<Alpha> kGrid{Alpha(0.0), Alpha(0.25), Alpha(0.5), Alpha(1.0),
                               Alpha(2.0), Alpha(8.0),  Alpha::infinity()};

std::vector<double> random_dist(std::mt19937_64& rng, std::size_t n, bool strictly_positive = false) {
    std::gamma_distribution<double> g(0.3, 1.0);
    std::bernoulli_distribution zero(0.2);
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) {
        v = (!strictly_positive && zero(rng)) ? 0.0 : g(rng) + 1e-9;
        s += v;
    }
    if (s == 0.0) {
        p[0] = 1.0;
        s = 1.0;
    }
    for (auto& v : p) v /= s;
    return p;
}

SubwordPosition first_position(const std::vector<double>& probs) {
    SubwordPosition p;
    for (double v : probs) p.logprobs.push_back(std::log(v));
    return p;
}

}  // namespace

TEST(Renyi, Uniform) {
    const std::vector<double> u(4, 0.25);
    for (auto a : kGrid) EXPECT_NEAR(renyi_entropy(u, a), 2.0, 1e-12) << a.to_string();
}

TEST(Renyi, WorkedExample) {
    const std::vector<double> p{0.5, 0.25, 0.25};
    EXPECT_NEAR(renyi_entropy(p, Alpha(1.0)), 1.5, 1e-12);
    EXPECT_NEAR(renyi_entropy(p, Alpha(0.5)), 1.54311, 1e-5);
    EXPECT_NEAR(renyi_entropy(p, Alpha(2.0)), 1.41504, 1e-5);
    EXPECT_NEAR(renyi_entropy(p, Alpha(0.0)), 1.58496, 1e-5);
    EXPECT_NEAR(renyi_entropy(p, Alpha::infinity()), 1.0, 1e-12);
}

TEST(Renyi, Degenerate) {
    const std::vector<double> p{1.0, 0.0, 0.0};
    for (auto a : kGrid) EXPECT_EQ(renyi_entropy(p, a), 0.0);
}

TEST(Renyi, Errors) {
    EXPECT_THROW(renyi_entropy(std::vector<double>{0.5, -0.1, 0.6}, Alpha(1.0)), DomainError);
    EXPECT_THROW(renyi_entropy(std::vector<double>{0.5, 0.6}, Alpha(1.0)), DomainError);
    EXPECT_NO_THROW(renyi_entropy(std::vector<double>{0.5, 0.50005}, Alpha(1.0)));
    EXPECT_THROW(Alpha(-1.0), DomainError);
    EXPECT_THROW(Alpha::parse("abc"), ConfigError);
    EXPECT_TRUE(Alpha::parse("inf").is_infinite());
    EXPECT_EQ(Alpha::parse("0.5").to_string(), "0.5");
}

TEST(Renyi, MonotoneAndMatchesOracle) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
        auto p = random_dist(rng, 2 + rng() % 100);
        double previous = std::numeric_limits<double>::infinity();
        for (auto a : kGrid) {
            const double h = renyi_entropy(p, a);
            EXPECT_GE(h, 0.0);
            EXPECT_LE(h, previous);
            EXPECT_NEAR(h, oracle::renyi(p, a.value()), 1e-9);
            previous = h;
        }
    }
}

TEST(Renyi, ContinuityAtSpecialOrders) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto p = random_dist(rng, 2 + rng() % 50, true);
        const double h1 = renyi_entropy(p, Alpha(1.0));
        EXPECT_LT(std::abs(renyi_entropy(p, Alpha(1.0 + 1e-4)) - h1), 1e-3);
        EXPECT_LT(std::abs(renyi_entropy(p, Alpha(1.0 - 1e-4)) - h1), 1e-3);
        EXPECT_LT(std::abs(renyi_entropy(p, Alpha(1e-4)) - renyi_entropy(p, Alpha(0.0))), 1e-3);
    }
}

TEST(Renyi, PermutationInvariant) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        auto p = random_dist(rng, 20);
        auto q = p;
        std::shuffle(q.begin(), q.end(), rng);
        for (auto a : kGrid) EXPECT_NEAR(renyi_entropy(p, a), renyi_entropy(q, a), 1e-12);
    }
}

TEST(Renyi, LogDomainAgrees) {
    const std::vector<double> p{0.5, 0.25, 0.25};
    std::vector<double> lp;
    for (double v : p) lp.push_back(std::log(v) + 0.00001);  // off by a little, renormalized
    for (auto a : kGrid) EXPECT_NEAR(renyi_entropy_from_logprobs(lp, a), renyi_entropy(p, a), 1e-9);
}

TEST(Surprisal, Examples) {
    EXPECT_DOUBLE_EQ(surprisal(std::vector<double>{0.25, 0.75}, 0), 2.0);
    EXPECT_DOUBLE_EQ(surprisal(std::vector<double>{1.0, 0.0}, 0), 0.0);
    EXPECT_NEAR(surprisal(std::vector<double>{0.1, 0.9}, 0), 3.32193, 1e-5);
    EXPECT_THROW(surprisal(std::vector<double>{1.0, 0.0}, 1), InfiniteSurprisalError);
}

TEST(Surprisal, WordSums) {
    EXPECT_DOUBLE_EQ(word_surprisal(std::vector<double>{1.5, 0.5}), 2.0);
    EXPECT_DOUBLE_EQ(word_surprisal(std::vector<double>{3.1}), 3.1);
    EXPECT_DOUBLE_EQ(word_surprisal(std::vector<double>{2, 2, 2}), 6.0);
    EXPECT_THROW(word_surprisal(std::vector<double>{}), ContractError);
}

TEST(WordEntropy, ToyLexicon) {
    // words aa, ab, b with p = .25, .25, .5; first subwords a, b
    const std::vector<double> words{0.25, 0.25, 0.5};
    const std::vector<double> first{0.5, 0.5};
    EXPECT_NEAR(renyi_entropy(words, Alpha(1.0)), 1.5, 1e-12);
    EXPECT_NEAR(word_entropy(first_position(first), Alpha(1.0)), 1.0, 1e-12);
    for (auto a : kGrid) EXPECT_LE(word_entropy(first_position(first), a), renyi_entropy(words, a) + 1e-12);
}

TEST(WordEntropy, SingleSubwordLexiconIsExact) {
    const std::vector<double> p{0.1, 0.2, 0.7};
    for (auto a : kGrid) EXPECT_NEAR(word_entropy(first_position(p), a), renyi_entropy(p, a), 1e-12);
    EXPECT_EQ(word_entropy(first_position({1.0}), Alpha(0.5)), 0.0);
}

TEST(WordEntropy, NonInitialIsContractError) {
    auto p = first_position({0.5, 0.5});
    p.subword_index = 1;
    EXPECT_THROW(word_entropy(p, Alpha(1.0)), ContractError);
}

TEST(Effort, ConstantOne) {
    const std::vector<double> p{0.5, 0.25, 0.25};
    EXPECT_NEAR(preprocessing_effort_total(p, 2.0), 1.0, 1e-12);
    EXPECT_NEAR(preprocessing_effort_total(p, 10.0), 1.0, 1e-12);
    const std::vector<double> u(7, 1.0 / 7.0);
    EXPECT_NEAR(preprocessing_effort_total(u, std::exp(2.0)), 1.0, 1e-12);
    EXPECT_THROW(preprocessing_effort_total(p, 1.0), DomainError);
    EXPECT_THROW(preprocessing_effort_total(p, 0.5), DomainError);
}

TEST(WordInfos, GroupsAndSuccessors) {
    std::vector<SubwordPosition> pos;
    auto add = [&](std::uint32_t w, std::uint16_t s, std::vector<double> p, std::uint32_t realized) {
        auto x = first_position(p);
        x.word_index = w;
        x.subword_index = s;
        x.realized_id = realized;
        pos.push_back(x);
    };
    add(0, 0, {0.5, 0.5}, 0);
    add(0, 1, {0.25, 0.75}, 0);
    add(1, 0, {0.25, 0.25, 0.5}, 2);
    const std::vector<Alpha> alphas{Alpha(1.0), Alpha(0.5)};
    auto t = compute_word_infos(pos, alphas);
    ASSERT_EQ(t.words.size(), 2u);
    const auto* w0 = t.find({0, 0});
    ASSERT_NE(w0, nullptr);
    EXPECT_NEAR(*w0->surprisal_bits, 3.0, 1e-12);
    EXPECT_NEAR(w0->entropy_bits.at(Alpha(1.0)), 1.0, 1e-12);
    ASSERT_TRUE(w0->successor_entropy_bits.has_value());
    EXPECT_NEAR(w0->successor_entropy_bits->at(Alpha(1.0)), 1.5, 1e-12);
    EXPECT_FALSE(t.find({0, 1})->successor_entropy_bits.has_value());

    std::stringstream s;
    write_word_infos_tsv(s, t);
    auto back = read_word_infos_tsv(s);
    EXPECT_EQ(back.alphas, t.alphas);
    EXPECT_NEAR(back.find({0, 0})->successor_entropy_bits->at(Alpha(0.5)),
                w0->successor_entropy_bits->at(Alpha(0.5)), 1e-12);
}

TEST(WordInfos, ZeroProbabilityCounted) {
    auto p = first_position({1.0, 0.0});
    p.realized_id = 1;
    const std::vector<Alpha> alphas{Alpha(1.0)};
    auto t = compute_word_infos(std::vector<SubwordPosition>{p}, alphas);
    EXPECT_EQ(t.infinite_surprisal_words, 1u);
    EXPECT_FALSE(t.find({0, 0})->surprisal_bits.has_value());
}

TEST(WordInfos, SubwordGap) {
    auto a = first_position({0.5, 0.5});
    auto b = a;
    b.subword_index = 2;
    const std::vector<Alpha> alphas{Alpha(1.0)};
    EXPECT_THROW(compute_word_infos(std::vector<SubwordPosition>{a, b}, alphas), FormatError);
}
