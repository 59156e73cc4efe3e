#include <gtest/gtest.h>

#include "stenograph/tensor.hpp"

using namespace stenograph;

TEST(Tensor, ShapeAndFill) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.dim(1), 3u);
  for (double v : t.data()) EXPECT_EQ(v, 1.5);
}

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_NO_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3, 4}));
  try {
    Tensor({2, 2}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Tensor, ScalarItem) {
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
  EXPECT_EQ(Tensor::scalar(4.0).rank(), 0u);
  EXPECT_THROW(Tensor({2}).item(), Error);
}

TEST(Tensor, FiniteCheck) {
  Tensor t({3});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}
