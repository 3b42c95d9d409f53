#include "spinboson/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace spinboson {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'D', '2'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void read_pod(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const std::string& path, const VariationalState& state,
                     std::uint64_t model_fingerprint) {
    state.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");

    os.write(kMagic, sizeof kMagic);
    write_pod(os, kVersion);
    const auto m = static_cast<std::uint64_t>(state.multiplicity());
    const auto n = static_cast<std::uint64_t>(state.num_modes());
    write_pod(os, m);
    write_pod(os, n);
    write_pod(os, model_fingerprint);
    os.write(reinterpret_cast<const char*>(state.up_amps.data()),
             static_cast<std::streamsize>(m * sizeof(double)));
    os.write(reinterpret_cast<const char*>(state.down_amps.data()),
             static_cast<std::streamsize>(m * sizeof(double)));
    for (std::uint64_t i = 0; i < m; ++i) {
        for (std::uint64_t k = 0; k < n; ++k) {
            const double v = state.displacements(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(k));
            write_pod(os, v);
        }
    }
    if (!os) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");

    char magic[4];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    std::uint64_t m = 0, n = 0;
    Checkpoint ck;
    read_pod(is, m);
    read_pod(is, n);
    read_pod(is, ck.model_fingerprint);
    if (m == 0 || m > (1u << 20) || n > (1u << 24))
        throw std::runtime_error("checkpoint: implausible dimensions");

    ck.state.up_amps.resize(static_cast<Eigen::Index>(m));
    ck.state.down_amps.resize(static_cast<Eigen::Index>(m));
    ck.state.displacements.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    is.read(reinterpret_cast<char*>(ck.state.up_amps.data()),
            static_cast<std::streamsize>(m * sizeof(double)));
    is.read(reinterpret_cast<char*>(ck.state.down_amps.data()),
            static_cast<std::streamsize>(m * sizeof(double)));
    for (std::uint64_t i = 0; i < m; ++i) {
        for (std::uint64_t k = 0; k < n; ++k) {
            double v;
            read_pod(is, v);
            ck.state.displacements(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
        }
    }
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return ck;
}

VariationalState load_checkpoint_for(const std::string& path, const ModelParams& params) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.model_fingerprint != params.fingerprint())
        throw std::runtime_error("checkpoint: model fingerprint mismatch (checkpoint belongs to a different model)");
    ck.state.validate(params);
    return std::move(ck.state);
}

}  // namespace spinboson
