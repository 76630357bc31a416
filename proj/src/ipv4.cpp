#include "labcube/ipv4.hpp"

#include <charconv>

namespace labcube {

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (text.empty() || text.front() != '.') return std::nullopt;
      text.remove_prefix(1);
    }
    std::size_t digits = 0;
    while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') ++digits;
    if (digits == 0 || digits > 3 || (digits > 1 && text.front() == '0')) return std::nullopt;
    unsigned part = 0;
    std::from_chars(text.data(), text.data() + digits, part);
    if (part > 255) return std::nullopt;
    value = (value << 8) | part;
    text.remove_prefix(digits);
  }
  if (!text.empty()) return std::nullopt;
  return Ipv4Address(value);
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value_ >> 24) + "." + std::to_string((value_ >> 16) & 0xff) + "." +
         std::to_string((value_ >> 8) & 0xff) + "." + std::to_string(value_ & 0xff);
}

Ipv4Cidr::Ipv4Cidr(Ipv4Address network, int prefix) : network_(network), prefix_(prefix) {}

std::optional<Ipv4Cidr> Ipv4Cidr::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto address = Ipv4Address::parse(text.substr(0, slash));
  std::string_view len = text.substr(slash + 1);
  if (!address || len.empty() || len.size() > 2 || (len.size() > 1 && len.front() == '0')) {
    return std::nullopt;
  }
  int prefix = -1;
  auto [ptr, ec] = std::from_chars(len.data(), len.data() + len.size(), prefix);
  if (ec != std::errc() || ptr != len.data() + len.size() || prefix < 0 || prefix > 32) {
    return std::nullopt;
  }
  Ipv4Cidr cidr(*address, prefix);
  if ((address->value() & ~cidr.mask()) != 0) return std::nullopt;
  return cidr;
}

std::uint32_t Ipv4Cidr::mask() const noexcept {
  return prefix_ == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_);
}

Ipv4Address Ipv4Cidr::last() const noexcept { return Ipv4Address(network_.value() | ~mask()); }

bool Ipv4Cidr::contains(Ipv4Address address) const noexcept {
  return (address.value() & mask()) == network_.value();
}

bool Ipv4Cidr::is_usable_host(Ipv4Address address) const noexcept {
  if (!contains(address)) return false;
  if (prefix_ >= 31) return true;
  return address != first() && address != last();
}

bool Ipv4Cidr::overlaps(const Ipv4Cidr& other) const noexcept {
  return first() <= other.last() && other.first() <= last();
}

std::string Ipv4Cidr::to_string() const {
  return network_.to_string() + "/" + std::to_string(prefix_);
}

}  // namespace labcube
