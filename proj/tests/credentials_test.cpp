// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "twinmesh/credentials.hpp"

using namespace twinmesh;

TEST(Passwords, HashAndVerify) {
  auto hash = hash_password("s3cret", HashCost::minimum());
  EXPECT_EQ(hash.rfind("$argon2id$", 0), 0u);
  EXPECT_TRUE(verify_password(hash, "s3cret"));
  EXPECT_FALSE(verify_password(hash, "s3cret!"));
  EXPECT_FALSE(verify_password("garbage", "s3cret"));
  // Per-entry salt.
  EXPECT_NE(hash, hash_password("s3cret", HashCost::minimum()));
}

TEST(CredentialStore, AuthenticatesPasswordsAndPsks) {
  CredentialStore store;
  store.add({"app1", PasswordCredential{hash_password("pw", HashCost::minimum())}, {Role::kApp}, std::nullopt});
  store.add({"car1-dev", PskCredential{"k1"}, {Role::kDevice}, "car1"});
  store.add_psk("k1", {0xde, 0xad, 0xbe, 0xef});

  EXPECT_TRUE(store.authenticate_password("app1", "pw"));
  EXPECT_FALSE(store.authenticate_password("app1", "nope"));
  EXPECT_FALSE(store.authenticate_password("ghost", "pw"));
  EXPECT_FALSE(store.authenticate_password("car1-dev", "pw"));

  std::vector<std::uint8_t> key{0xde, 0xad, 0xbe, 0xef}, wrong{0xde, 0xad, 0xbe, 0xee}, short_key{0xde};
  auto device = store.authenticate_psk("car1-dev", key);
  ASSERT_TRUE(device);
  EXPECT_EQ(device->device_id, "car1");
  EXPECT_FALSE(store.authenticate_psk("car1-dev", wrong));
  EXPECT_FALSE(store.authenticate_psk("car1-dev", short_key));
  EXPECT_FALSE(store.authenticate_psk("app1", key));

  EXPECT_THROW(store.add({"app1", {}, {Role::kApp}, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(store.add({"car2-dev", {}, {Role::kDevice}, std::nullopt}), std::invalid_argument);
}

TEST(CredentialStore, JsonRoundTrip) {
  auto hash = hash_password("pw", HashCost::minimum());
  auto j = nlohmann::json::parse(R"({"principals":[
      {"id":"app1","roles":["app"],"password_hash":")" + hash + R"("},
      {"id":"ops","roles":["admin","app"],"password_hash":")" + hash + R"("},
      {"id":"car1-dev","roles":["device"],"device":"car1","psk_id":"k1"}],
    "psks":[{"id":"k1","key_hex":"00ff10"}]})");
  auto store = CredentialStore::from_json(j);
  EXPECT_TRUE(store.find("ops")->has_role(Role::kAdmin));
  std::vector<std::uint8_t> key{0x00, 0xff, 0x10};
  EXPECT_TRUE(store.authenticate_psk("car1-dev", key));
  EXPECT_TRUE(store.authenticate_password("app1", "pw"));
  auto again = CredentialStore::from_json(store.to_json());
  EXPECT_EQ(again.to_json(), store.to_json());
  EXPECT_TRUE(again.authenticate_psk("car1-dev", key));

  EXPECT_THROW(CredentialStore::from_json(nlohmann::json::parse(
                   R"({"principals":[{"id":"x","roles":["wizard"]}]})")),
               std::invalid_argument);
  EXPECT_THROW(CredentialStore::from_json(nlohmann::json::parse(
                   R"({"principals":[],"psks":[{"id":"k","key_hex":"zz"}]})")),
               std::invalid_argument);
}
