#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>



namespace fearfactor::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string() + " for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 initialisation failed");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

void write_manifest(const std::filesystem::path& path, const std::string& stage,
                    const std::vector<std::filesystem::path>& inputs, const std::vector<std::filesystem::path>& outputs,
                    const std::string& config_echo) {
    std::ostringstream body;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    body << "stage=" << stage << '\n'
         << "code_version=" << FEARFACTOR_VERSION << '\n'
         << "timestamp=" << stamp << '\n';
    for (const auto& p : inputs) body << "input." << p.string() << '=' << sha256_file(p) << '\n';
    for (const auto& p : outputs) body << "output." << p.filename().string() << '=' << sha256_file(p) << '\n';
    std::istringstream cfg(config_echo);
    for (std::string line; std::getline(cfg, line);)
        if (!line.empty()) body << "config." << line << '\n';

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << body.str();
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace fearfactor::cli
