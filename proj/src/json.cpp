#include "rate/json.hpp"

#include <cmath>

#include <fmt/format.h>

namespace rate {

namespace {

void write(const nlohmann::json& v, std::string& out) {
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {  // std::map order: sorted
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(key).dump();
        out += ':';
        write(item, out);
      }
      out += '}';
      break;
    }
    case nlohmann::json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        write(v[i], out);
      }
      out += ']';
      break;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? fmt::format("{:.17g}", d) : "null";
      break;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string canonical_json(const nlohmann::json& value) {
  std::string out;
  write(value, out);
  return out;
}

nlohmann::json to_json(const RateEstimate& e) {
  return nlohmann::json{
      {"weight", e.weight},         {"point", e.point},       {"std_error", e.std_error},
      {"ci_low", e.ci_low},         {"ci_high", e.ci_high},   {"p_value", e.p_value},
      {"replicates", e.replicates}, {"seed", e.seed},         {"n", e.n},
      {"degenerate", e.degenerate},
  };
}

}  // namespace rate
