#include "anderson/chain.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "anderson/csv.hpp"
#include "anderson/errors.hpp"
#include "anderson/rng.hpp"

namespace anderson {

void ChainSpec::validate() const {
  if (n < 3) {
    throw ConfigError(
        "chain length must be >= 3: periodic neighbor indices are ambiguous "
        "for n = 2 (both hopping paths coincide), got n = " + std::to_string(n));
  }
  if (!(disorder_strength >= 0.0)) {
    throw ConfigError("disorder_strength must be >= 0");
  }
  if (hopping != 1.0) {
    throw ConfigError("hopping is the energy unit and must be 1");
  }
}

bool operator==(const ChainSpec& a, const ChainSpec& b) {
  return a.n == b.n && a.disorder_strength == b.disorder_strength &&
         a.seed == b.seed && a.hopping == b.hopping;
}

std::string to_json_string(const ChainSpec& spec) {
  nlohmann::ordered_json j;
  j["n"] = spec.n;
  j["disorder_strength"] = spec.disorder_strength;
  j["seed"] = spec.seed;
  j["hopping"] = spec.hopping;
  return j.dump();
}

ChainSpec chain_spec_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad chain spec JSON: ") + e.what());
  }
  ChainSpec spec;
  try {
    spec.n = j.at("n").get<int>();
    spec.disorder_strength = j.at("disorder_strength").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.hopping = j.value("hopping", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad chain spec JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

DisorderRealization sample_disorder(const ChainSpec& spec, int realization_index) {
  spec.validate();
  if (realization_index < 0) {
    throw ConfigError("realization_index must be >= 0");
  }
  DisorderRealization out;
  out.spec = spec;
  out.realization_index = realization_index;
  out.energies = Eigen::VectorXd::Zero(spec.n);
  if (spec.disorder_strength > 0.0) {
    RngStream rng(spec.seed,
                  streams::kDisorder + static_cast<std::uint64_t>(realization_index));
    for (int j = 0; j < spec.n; ++j) {
      out.energies[j] = spec.disorder_strength * rng.gaussian();
    }
  }
  return out;
}

Hamiltonian build_hamiltonian(const DisorderRealization& realization) {
  const int n = static_cast<int>(realization.energies.size());
  realization.spec.validate();
  if (n != realization.spec.n) {
    throw ConfigError("realization length does not match its spec");
  }
  const double v = realization.spec.hopping;
  Hamiltonian h;
  h.matrix = Eigen::MatrixXd::Zero(n, n);
  h.matrix.diagonal() = realization.energies;
  for (int j = 0; j < n; ++j) {
    h.matrix(j, (j + 1) % n) = v;
    h.matrix(j, (j + n - 1) % n) = v;
  }
  return h;
}

void export_energies_csv(const DisorderRealization& realization,
                         const std::string& path) {
  CsvWriter csv(path, {"energy"});
  csv.meta("spec", to_json_string(realization.spec));
  csv.meta("realization", std::to_string(realization.realization_index));
  csv.begin_data();
  for (int j = 0; j < realization.energies.size(); ++j) {
    csv.row({realization.energies[j]});
  }
}

}  // namespace anderson
