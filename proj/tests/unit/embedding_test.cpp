#include <cmath>

#include <gtest/gtest.h>

#include "racg/embedding.hpp"

using namespace racg;

namespace {

double norm(const Embedding& v)
{
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST(HashingEmbedder, DeterministicUnitVectors)
{
    HashingEmbedder a("a", 64, 1);
    auto v = a.embed("int main(void) { return 0; }");
    ASSERT_EQ(v.size(), 64u);
    EXPECT_NEAR(norm(v), 1.0, 1e-12);
    EXPECT_EQ(v, a.embed("int main(void) { return 0; }"));
    EXPECT_EQ(v, HashingEmbedder("other-name", 64, 1).embed("int main(void) { return 0; }"));
}

TEST(HashingEmbedder, SeedChangesTheSpace)
{
    HashingEmbedder a("a", 256, 1), b("b", 256, 2);
    int differ = 0;
    for (auto tok : {"alpha", "beta", "gamma", "delta", "epsilon"}) differ += a.bucket(tok) != b.bucket(tok);
    EXPECT_GT(differ, 0);
}

TEST(HashingEmbedder, PunctuationOnlyTextStillEmbeds)
{
    HashingEmbedder e;
    auto v = e.embed("{ } ;");
    EXPECT_NEAR(norm(v), 1.0, 1e-12);
    EXPECT_EQ(v, e.embed("()"));
}

TEST(HashingEmbedder, BlankTextRejected)
{
    HashingEmbedder e;
    EXPECT_THROW(e.embed(""), std::invalid_argument);
    EXPECT_THROW(e.embed("  \n\t"), std::invalid_argument);
    std::vector<std::string> batch = {"ok", " "};
    EXPECT_THROW(e.embed_batch(batch), std::invalid_argument);
}

TEST(HashingEmbedder, BatchMatchesSingle)
{
    HashingEmbedder e("e", 32, 5);
    std::vector<std::string> texts = {"a b c", "x y", "return a + b"};
    auto batch = e.embed_batch(texts);
    ASSERT_EQ(batch.size(), 3u);
    for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(batch[i], e.embed(texts[i]));
}

TEST(CachingEmbedder, SameVectorsAndCaches)
{
    auto inner = std::make_shared<HashingEmbedder>("h", 16, 3);
    CachingEmbedder c(inner);
    EXPECT_EQ(c.name(), "h");
    EXPECT_EQ(c.embed("foo bar"), inner->embed("foo bar"));
    c.embed("foo bar");
    std::vector<std::string> texts = {"foo bar", "baz"};
    c.embed_batch(texts);
    EXPECT_EQ(c.cached(), 2u);
}

TEST(Cosine, BasicProperties)
{
    std::vector<double> a = {1, 0}, b = {0, 1}, c = {2, 0}, d = {-1, 0};
    EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(a, d), -1.0);
    std::vector<double> zero = {0, 0}, three = {1, 2, 3};
    EXPECT_THROW(cosine_similarity(a, zero), std::invalid_argument);
    EXPECT_THROW(cosine_similarity(a, three), std::invalid_argument);
    EXPECT_DOUBLE_EQ(squared_euclidean(a, b), 2.0);
}
