#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace labcube {

class Ipv4Address {
 public:
  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t value) : value_(value) {}

  // Strict dotted quad: four decimal octets, no leading zeros, no spaces.
  static std::optional<Ipv4Address> parse(std::string_view text);

  constexpr std::uint32_t value() const noexcept { return value_; }
  std::string to_string() const;

  auto operator<=>(const Ipv4Address&) const = default;

 private:
  std::uint32_t value_ = 0;
};

class Ipv4Cidr {
 public:
  Ipv4Cidr() = default;
  Ipv4Cidr(Ipv4Address network, int prefix);

  // "a.b.c.d/len"; host bits must be zero.
  static std::optional<Ipv4Cidr> parse(std::string_view text);

  Ipv4Address network() const noexcept { return network_; }
  int prefix() const noexcept { return prefix_; }
  std::uint32_t mask() const noexcept;
  Ipv4Address first() const noexcept { return network_; }
  Ipv4Address last() const noexcept;

  bool contains(Ipv4Address address) const noexcept;
  // True for addresses a host may use: inside the subnet and, for prefixes up
  // to /30, neither the network nor the broadcast address.
  bool is_usable_host(Ipv4Address address) const noexcept;
  bool overlaps(const Ipv4Cidr& other) const noexcept;

  std::string to_string() const;

  auto operator<=>(const Ipv4Cidr&) const = default;

 private:
  Ipv4Address network_;
  int prefix_ = 32;
};

}  // namespace labcube
