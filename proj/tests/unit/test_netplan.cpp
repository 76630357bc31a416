#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "labcube/error.hpp"
#include "labcube/hash.hpp"
#include "labcube/hosts.hpp"
#include "labcube/ipv4.hpp"
#include "labcube/netplan.hpp"
#include "labcube/stack_model.hpp"
#include "oracles.hpp"

using namespace labcube;

namespace {

Ipv4Address ip(const char* text) { return *Ipv4Address::parse(text); }

}  // namespace

TEST(Ipv4, StrictParsing) {
  EXPECT_EQ(ip("10.5.0.1").value(), 0x0A050001u);
  EXPECT_EQ(ip("255.255.255.255").to_string(), "255.255.255.255");
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "01.2.3.4", "256.1.1.1", " 1.2.3.4", "1.2.3.4 ", "a.b.c.d", "1..2.3"}) {
    EXPECT_FALSE(Ipv4Address::parse(bad)) << bad;
  }
}

TEST(Ipv4, CidrRules) {
  const auto net = *Ipv4Cidr::parse("10.5.0.0/24");
  EXPECT_FALSE(Ipv4Cidr::parse("10.5.0.1/24"));
  EXPECT_FALSE(Ipv4Cidr::parse("10.5.0.0/33"));
  EXPECT_EQ(net.last(), ip("10.5.0.255"));
  EXPECT_TRUE(net.contains(ip("10.5.0.0")));
  EXPECT_FALSE(net.is_usable_host(ip("10.5.0.0")));
  EXPECT_FALSE(net.is_usable_host(ip("10.5.0.255")));
  EXPECT_TRUE(net.is_usable_host(ip("10.5.0.254")));
  EXPECT_FALSE(net.is_usable_host(ip("10.5.1.1")));
  const auto p2p = *Ipv4Cidr::parse("10.0.0.0/31");
  EXPECT_TRUE(p2p.is_usable_host(ip("10.0.0.0")));
  EXPECT_TRUE(p2p.is_usable_host(ip("10.0.0.1")));
  EXPECT_TRUE(Ipv4Cidr::parse("10.0.0.0/8")->overlaps(net));
  EXPECT_FALSE(Ipv4Cidr::parse("10.6.0.0/24")->overlaps(net));
  EXPECT_EQ(Ipv4Cidr::parse("0.0.0.0/0")->mask(), 0u);
}

TEST(Ipv4, UsableMatchesOracle) {
  std::mt19937 rng(3);
  for (int i = 0; i < 20000; ++i) {
    const int prefix = static_cast<int>(rng() % 33);
    const std::uint32_t mask = prefix == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix);
    const Ipv4Cidr net(Ipv4Address(static_cast<std::uint32_t>(rng()) & mask), prefix);
    const std::uint32_t probe = rng() % 2 ? static_cast<std::uint32_t>(rng())
                                          : (net.network().value() | (static_cast<std::uint32_t>(rng()) & ~mask));
    ASSERT_EQ(net.is_usable_host(Ipv4Address(probe)), oracle::usable(net, probe)) << net.to_string();
  }
}

TEST(Hash, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Networks, CatalogParsingAndDefaults) {
  const auto catalog = parse_network_catalog(
      "networks:\n  corenet:\n    kind: MACVLAN_TRUNK\n    subnet: 10.5.0.0/24\n    gateway: 10.5.0.1\n    vlan_id: 5\n"
      "  rfnet:\n    kind: ISOLATED\n    subnet: 192.168.40.0/24\n");
  ASSERT_EQ(catalog.networks.size(), 2u);
  EXPECT_EQ(catalog.find("corenet")->vlan_id, 5);
  EXPECT_FALSE(catalog.find("rfnet")->gateway);
  EXPECT_EQ(parse_network_catalog(serialize_network_catalog(catalog)).networks, catalog.networks);
  EXPECT_TRUE(validate_networks(default_network_catalog()).empty());
  EXPECT_THROW(parse_network_catalog("networks:\n  x:\n    kind: WIFI\n    subnet: 10.0.0.0/24\n"), SchemaError);
  EXPECT_THROW(parse_network_catalog("networks:\n  x:\n    kind: ISOLATED\n    subnet: 10.0.0.1/24\n"), SchemaError);
}

TEST(Networks, SemanticFindings) {
  NetworkCatalog c;
  c.networks.push_back({"a", NetworkKind::BridgeWan, *Ipv4Cidr::parse("10.0.0.0/16"), ip("10.1.0.1"), 7});
  c.networks.push_back({"b", NetworkKind::MacvlanTrunk, *Ipv4Cidr::parse("10.0.5.0/24"), std::nullopt, std::nullopt});
  c.networks.push_back({"a", NetworkKind::Isolated, *Ipv4Cidr::parse("172.16.0.0/24"), std::nullopt, std::nullopt});
  const auto r = validate_networks(c);
  for (const char* code : {"DUPLICATE_NAME", "OVERLAP", "GATEWAY_OUTSIDE_SUBNET", "VLAN_MISUSE"}) {
    EXPECT_TRUE(r.has_code(code)) << code;
  }
}

TEST(Networks, MacIsStableAndLocallyAdministered) {
  const std::string mac = derive_mac("amf", "corenet");
  EXPECT_EQ(mac, derive_mac("amf", "corenet"));
  EXPECT_NE(mac, derive_mac("amf", "extnet"));
  EXPECT_NE(mac, derive_mac("smf", "corenet"));
  EXPECT_TRUE(std::regex_match(mac, std::regex("02(:[0-9a-f]{2}){5}"))) << mac;
}

TEST(AddressPlan, FromStaticAndKeyedAttachments) {
  StackManifest m;
  m.name = "s";
  ServiceSpec a{"a", "i", ServiceRole::CoreNf, {{"corenet", ip("10.5.0.11"), std::nullopt}}, {}, "controller", {}, {}};
  ServiceSpec b{"b", "i", ServiceRole::CoreNf, {{"corenet", std::nullopt, "B_IP"}, {"extnet", std::nullopt, std::nullopt}},
                {}, "controller", {}, {}};
  m.services = {a, b};
  const auto plan = build_address_plan(m, resolve_settings(SettingsMap{{"B_IP", "10.5.0.12"}}, {}));
  ASSERT_EQ(plan.assignments.size(), 2u);
  EXPECT_EQ(plan.find("b", "corenet")->address, ip("10.5.0.12"));
  EXPECT_EQ(plan.find("b", "extnet"), nullptr);
  EXPECT_EQ(plan.for_service("a").size(), 1u);
  EXPECT_EQ(plan.find("a", "corenet")->mac, derive_mac("a", "corenet"));
  EXPECT_THROW(build_address_plan(m, {}), UnresolvedAddressKey);
  EXPECT_THROW(build_address_plan(m, resolve_settings(SettingsMap{{"B_IP", "nope"}}, {})), UnparsableAddress);
}

TEST(AddressPlan, ConflictKinds) {
  const auto catalog = default_network_catalog();
  AddressPlan plan;
  plan.assignments = {
      {"b", "corenet", ip("10.5.0.20"), ""}, {"a", "corenet", ip("10.5.0.20"), ""},
      {"c", "corenet", ip("10.5.0.1"), ""},  {"d", "corenet", ip("10.5.0.255"), ""},
      {"e", "corenet", ip("10.6.0.9"), ""},  {"f", "nowhere", ip("10.5.0.30"), ""},
      {"g", "extnet", ip("10.5.0.20"), ""},
  };
  const auto conflicts = check_address_plan(plan, catalog);
  const std::set<Conflict> got(conflicts.begin(), conflicts.end());
  EXPECT_EQ(got, oracle::brute_force_conflicts(plan, catalog));
  EXPECT_TRUE(got.count({ConflictKind::Duplicate, "corenet", ip("10.5.0.20"), {"a", "b"}}));
  EXPECT_TRUE(got.count({ConflictKind::GatewayCollision, "corenet", ip("10.5.0.1"), {"c"}}));
  EXPECT_TRUE(got.count({ConflictKind::OutOfSubnet, "corenet", ip("10.5.0.255"), {"d"}}));
  EXPECT_TRUE(got.count({ConflictKind::OutOfSubnet, "corenet", ip("10.6.0.9"), {"e"}}));
  EXPECT_TRUE(got.count({ConflictKind::UnknownNetwork, "nowhere", ip("10.5.0.30"), {"f"}}));
  EXPECT_EQ(got.size(), conflicts.size());
  EXPECT_TRUE(check_address_plan({}, catalog).empty());
}

TEST(Hosts, RegistryParsing) {
  const auto r = parse_host_registry(
      "controller: ctl\ncontroller_engine: unix:///var/run/docker.sock\nran_hosts:\n"
      "  - name: ran-1\n    engine: tcp://10.0.0.2:2375\n    channel: ssh://lab@10.0.0.2\n");
  EXPECT_EQ(r.controller, "ctl");
  EXPECT_EQ(r.controller_engine.kind, EndpointKind::Real);
  EXPECT_TRUE(r.knows("ran-1"));
  EXPECT_FALSE(r.knows("ran-2"));
  EXPECT_EQ(r.host_names(), (std::vector<std::string>{"ctl", "ran-1"}));
  EXPECT_EQ(r.find_ran_host("ran-1")->channel.address, "ssh://lab@10.0.0.2");
  EXPECT_EQ(default_host_registry().host_names(), (std::vector<std::string>{"controller", "ran-1", "ran-2"}));
  EXPECT_THROW(make_endpoint("x", "ftp://x"), SchemaError);
  EXPECT_THROW(make_endpoint("x", ""), SchemaError);
  EXPECT_EQ(make_endpoint("x", "sim://x").kind, EndpointKind::Simulated);
}
