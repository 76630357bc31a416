#include <gtest/gtest.h>

#include "labcube/error.hpp"
#include "labcube/lab.hpp"
#include "labcube/stack_model.hpp"
#include "rig.hpp"

using namespace labcube;

namespace {

const char* kMinimal = R"(name: mini
description: two services
generation: G5SA
networks: [corenet]
overrides:
  TAC: '9'
services:
  amf:
    image: core:1
    role: CORE_NF
    attachments:
      - network: corenet
        static_ip: 10.5.0.11
  gnb:
    image: ran:1
    role: RAN
    target_host: ran-1
    depends_on: [amf]
    attachments:
      - network: corenet
        ip_key: GNB_IP
    templates:
      - [srsran/gnb.yaml.tmpl, /etc/gnb.yaml]
)";

struct Env {
  NetworkCatalog networks = default_network_catalog();
  HostRegistry hosts = default_host_registry();
  ResolvedSettings settings = resolve_settings(SettingsMap{{"GNB_IP", "10.5.0.100"}}, {});
};

}  // namespace

TEST(Manifest, ParsesAllFields) {
  const auto m = parse_manifest(kMinimal);
  EXPECT_EQ(m.name, "mini");
  EXPECT_EQ(m.generation, Generation::G5SA);
  ASSERT_EQ(m.services.size(), 2u);
  EXPECT_EQ(m.services[0].target_host, "controller");
  const auto* gnb = m.find_service("gnb");
  ASSERT_NE(gnb, nullptr);
  EXPECT_EQ(gnb->role, ServiceRole::Ran);
  EXPECT_EQ(gnb->target_host, "ran-1");
  EXPECT_EQ(gnb->depends_on, std::vector<std::string>{"amf"});
  EXPECT_EQ(*gnb->attachments[0].ip_setting_key, "GNB_IP");
  EXPECT_EQ(m.services[0].attachments[0].static_ip, Ipv4Address::parse("10.5.0.11"));
  EXPECT_EQ(gnb->templates[0].target, "/etc/gnb.yaml");
  EXPECT_EQ(*m.overrides.find("TAC"), "9");
}

TEST(Manifest, SerializeRoundTrips) {
  const auto m = parse_manifest(kMinimal);
  EXPECT_EQ(parse_manifest(serialize_manifest(m)), m);
  for (const auto& e : load_catalog(rig::lab_dir() / "stacks").entries) {
    EXPECT_EQ(parse_manifest(serialize_manifest(e.manifest)), e.manifest) << e.manifest.name;
  }
}

TEST(Manifest, RejectsSchemaViolations) {
  auto field_of = [](const std::string& text) -> std::string {
    try {
      parse_manifest(text);
    } catch (const SchemaError& e) {
      return e.field();
    }
    return "<accepted>";
  };
  const std::string svc = "name: x\ngeneration: G5SA\nservices:\n  a:\n    image: i:1\n";
  EXPECT_EQ(field_of(std::string(kMinimal) + "bogus: 1\n"), "bogus");
  EXPECT_EQ(field_of("name: x\ngeneration: G9\nservices:\n  a:\n    image: i:1\n    role: UTIL\n"), "generation");
  EXPECT_EQ(field_of("generation: G5SA\nservices:\n  a:\n    image: i:1\n    role: UTIL\n"), "name");
  EXPECT_EQ(field_of(svc + "    role: KING\n"), "services.a.role");
  EXPECT_EQ(field_of(svc + "    role: UTIL\n    image_tag: 2\n"), "services.a.image_tag");
  EXPECT_NE(field_of(svc + "    role: UTIL\n    attachments:\n      - network: n\n        static_ip: 1.2.3.4\n"
                           "        ip_key: K\n")
                .find("services.a.attachments"),
            std::string::npos);
  EXPECT_THROW(parse_manifest("name: [x\n"), SyntaxError);
}

TEST(Manifest, DuplicateServiceIsRejected) {
  EXPECT_THROW(parse_manifest("name: x\ngeneration: G5SA\nservices:\n  a:\n    image: i:1\n    role: UTIL\n"
                              "  a:\n    image: j:1\n    role: UTIL\n"),
               DuplicateService);
}

TEST(Validate, CleanManifestHasNoFindings) {
  Env env;
  EXPECT_TRUE(validate_manifest(parse_manifest(kMinimal), env.networks, env.hosts, env.settings).empty());
}

TEST(Validate, ReportsEveryFindingKind) {
  Env env;
  auto m = parse_manifest(kMinimal);
  m.services[0].attachments.push_back({"extnet", std::nullopt, std::nullopt});
  m.services[0].depends_on = {"ghost", "amf"};
  m.services[0].target_host = "ran-2";
  m.services[1].target_host = "ran-9";
  m.services[1].attachments.push_back({"nowhere", std::nullopt, std::string("MISSING_KEY")});
  m.networks.push_back("nowhere");
  const auto report = validate_manifest(m, env.networks, env.hosts, env.settings);
  for (const char* code : {"NETWORK_NOT_DECLARED", "DYNAMIC_ADDRESS", "UNKNOWN_DEPENDENCY", "DEPENDENCY_CYCLE",
                           "REMOTE_NON_RAN", "UNKNOWN_HOST", "UNKNOWN_NETWORK", "UNRESOLVED_SETTING"}) {
    EXPECT_TRUE(report.has_code(code)) << code;
  }
}

TEST(Validate, AddressProblems) {
  Env env;
  auto m = parse_manifest(kMinimal);
  m.services[0].attachments[0].static_ip = Ipv4Address::parse("10.5.0.100");
  EXPECT_TRUE(validate_manifest(m, env.networks, env.hosts, env.settings).has_code("ADDRESS_CONFLICT"));
  env.settings = resolve_settings(SettingsMap{{"GNB_IP", "10.5.0.300"}}, {});
  EXPECT_TRUE(validate_manifest(parse_manifest(kMinimal), env.networks, env.hosts, env.settings)
                  .has_code("INVALID_ADDRESS"));
}

TEST(Validate, DependencyCycle) {
  Env env;
  auto m = parse_manifest(kMinimal);
  m.services[0].depends_on = {"gnb"};
  EXPECT_TRUE(validate_manifest(m, env.networks, env.hosts, env.settings).has_code("DEPENDENCY_CYCLE"));
  EXPECT_THROW(topological_order(m), CycleError);
}

TEST(Topology, DependenciesFirstAndRanLast) {
  auto m = parse_manifest(kMinimal);
  std::swap(m.services[0], m.services[1]);
  EXPECT_EQ(topological_order(m), (std::vector<std::string>{"amf", "gnb"}));
  const auto catalog = load_catalog(rig::lab_dir() / "stacks");
  for (const auto& e : catalog.entries) {
    const auto order = topological_order(e.manifest);
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < order.size(); ++i) at[order[i]] = i;
    ASSERT_EQ(at.size(), e.manifest.services.size());
    for (const auto& s : e.manifest.services) {
      for (const auto& d : s.depends_on) EXPECT_LT(at[d], at[s.name]) << e.manifest.name;
    }
  }
}

TEST(Emulated, ReplacesRanServicesOnController) {
  const auto catalog = load_catalog(rig::lab_dir() / "stacks");
  const auto& m = catalog.find("srsran-open5gs-5gsa")->manifest;
  const auto em = make_emulated_variant(m);
  EXPECT_EQ(em.generation, Generation::Emulated);
  for (const auto& s : em.services) EXPECT_EQ(s.target_host, "controller") << s.name;
  EXPECT_GT(em.services.size(), m.services.size() - 1);
  EXPECT_THROW(make_emulated_variant(catalog.find("osmocom-2g")->manifest), SchemaError);
}

TEST(Catalog, ListsFixturesAndSkipsBrokenFiles) {
  rig::TempDir dir;
  const auto lab = rig::copy_lab(dir);
  rig::write(lab / "stacks" / "zz-broken.yaml", "name: [\n");
  rig::write(lab / "stacks" / "dup.yaml", read_file(lab / "stacks" / "osmocom-2g.yaml"));
  rig::write(lab / "stacks" / "notes.txt", "ignored");
  const auto list = list_catalog(lab / "stacks");
  EXPECT_EQ(list.entries.size(), 8u);
  EXPECT_TRUE(list.findings.has_code("PARSE_ERROR"));
  EXPECT_TRUE(list.findings.has_code("DUPLICATE_STACK"));
  for (std::size_t i = 1; i < list.entries.size(); ++i) EXPECT_LT(list.entries[i - 1].name, list.entries[i].name);
  EXPECT_THROW(load_catalog(dir.path() / "missing"), IoError);
}

TEST(Catalog, FixturesUsePinnedVersions) {
  const auto catalog = load_catalog(rig::lab_dir() / "stacks");
  auto image = [&](const std::string& stack, const std::string& service) {
    return catalog.find(stack)->manifest.find_service(service)->image;
  };
  EXPECT_NE(image("srsran-open5gs-5gsa", "gnb").find("24.10.1"), std::string::npos);
  EXPECT_NE(image("srsran-open5gs-5gsa", "amf").find("2.7.2"), std::string::npos);
  EXPECT_NE(image("oairan-oaicore-5gsa", "gnb").find("2024.w23"), std::string::npos);
  EXPECT_NE(image("srsran-oaicore-5gsa", "amf").find("2.1.0"), std::string::npos);
  EXPECT_NE(image("srsran-free5gc-5gsa", "amf").find("3.4.4"), std::string::npos);
}
