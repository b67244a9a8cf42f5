//
// Copyright 2026 The prlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "prlink/paillier.h"

#include <gtest/gtest.h>

namespace prlink {
namespace {

class PaillierTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng = MakeRng(1234);
    key_ = new KeyPair(KeyPair::Generate(512, rng));
  }
  static void TearDownTestSuite() { delete key_; }
  static KeyPair* key_;
};

KeyPair* PaillierTest::key_ = nullptr;

TEST_F(PaillierTest, KeyShape) {
  EXPECT_GE(mpz_sizeinbase(key_->pub().n.get_mpz_t(), 2), 511u);
  EXPECT_EQ(key_->pub().n2, key_->pub().n * key_->pub().n);
}

TEST_F(PaillierTest, RoundTrip) {
  Rng rng = MakeRng(1);
  for (long v : {0L, 1L, 42L, 1L << 40}) {
    EXPECT_EQ(key_->Decrypt(Encrypt(key_->pub(), v, rng)), v);
  }
  const mpz_class big = key_->pub().n - 1;
  EXPECT_EQ(key_->Decrypt(Encrypt(key_->pub(), big, rng)), big);
}

TEST_F(PaillierTest, NegativeWraps) {
  Rng rng = MakeRng(2);
  EXPECT_EQ(key_->Decrypt(Encrypt(key_->pub(), -5, rng)), key_->pub().n - 5);
}

TEST_F(PaillierTest, Homomorphisms) {
  Rng rng = MakeRng(3);
  const PublicKey& pk = key_->pub();
  const Ciphertext a = Encrypt(pk, 1000, rng);
  const Ciphertext b = Encrypt(pk, 234, rng);
  EXPECT_EQ(key_->Decrypt(Add(pk, a, b)), 1234);
  EXPECT_EQ(key_->Decrypt(ScalarMul(pk, a, 7)), 7000);
  EXPECT_EQ(key_->Decrypt(Add(pk, ScalarMul(pk, b, -1), a)), 766);
  EXPECT_EQ(key_->Decrypt(Add(pk, a, Negate(pk, a))), 0);
  EXPECT_EQ(key_->Decrypt(ScalarMul(pk, a, mpz_class(3))), 3000);
  EXPECT_EQ(key_->Decrypt(Add(pk, a, EncryptDeterministic(pk, 5))), 1005);
}

TEST_F(PaillierTest, RerandomizeChangesCiphertextOnly) {
  Rng rng = MakeRng(4);
  const Ciphertext a = Encrypt(key_->pub(), 99, rng);
  const Ciphertext b = Rerandomize(key_->pub(), a, rng);
  EXPECT_NE(a.c, b.c);
  EXPECT_EQ(key_->Decrypt(b), 99);
}

TEST_F(PaillierTest, EncryptionIsRandomized) {
  Rng rng = MakeRng(5);
  EXPECT_NE(Encrypt(key_->pub(), 7, rng).c, Encrypt(key_->pub(), 7, rng).c);
}

TEST(PaillierKeyTest, RejectsWeakKeys) {
  Rng rng = MakeRng(6);
  try {
    KeyPair::Generate(256, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWeakKey);
  }
  EXPECT_NO_THROW(KeyPair::Generate(256, rng, 128));
}

TEST(PaillierKeyTest, SeededKeysAreReproducible) {
  Rng a = MakeRng(77), b = MakeRng(77);
  EXPECT_EQ(KeyPair::Generate(512, a).pub().n,
            KeyPair::Generate(512, b).pub().n);
}

TEST(BigEndianTest, RoundTrip) {
  const mpz_class v("123456789012345678901234567890");
  EXPECT_EQ(FromBigEndian(ToBigEndian(v)), v);
  EXPECT_EQ(FromBigEndian(ToBigEndian(mpz_class(0))), 0);
}

TEST(RandomTest, Ranges) {
  Rng rng = MakeRng(9);
  for (int i = 0; i < 1000; ++i) {
    const mpz_class r = RandomBits(rng, 40);
    EXPECT_GE(r, 0);
    EXPECT_LT(r, mpz_class(1) << 40);
    const mpz_class s = RandomBelow(rng, 17);
    EXPECT_GE(s, 0);
    EXPECT_LT(s, 17);
  }
}

}  // namespace
}  // namespace prlink
