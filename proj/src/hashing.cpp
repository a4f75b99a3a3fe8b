#include "radar/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace radar {

namespace {

std::string to_hex(std::span<const std::uint8_t> digest) {
    static const char* alphabet = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (std::uint8_t byte : digest) {
        out.push_back(alphabet[byte >> 4]);
        out.push_back(alphabet[byte & 0x0f]);
    }
    return out;
}

std::string evp_digest_hex(const EVP_MD* md, std::span<const std::uint8_t> prefix,
                           std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
    bool ok = EVP_DigestInit_ex(ctx, md, nullptr) == 1 &&
              (prefix.empty() || EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1) &&
              (data.empty() || EVP_DigestUpdate(ctx, data.data(), data.size()) == 1) &&
              EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("digest computation failed");
    return to_hex(std::span<const std::uint8_t>(digest.data(), len));
}

} // namespace

std::string sha1_hex(std::span<const std::uint8_t> data) {
    return evp_digest_hex(EVP_sha1(), {}, data);
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    return evp_digest_hex(EVP_sha256(), {}, data);
}

std::string git_blob_sha1(std::span<const std::uint8_t> content) {
    std::string header = "blob " + std::to_string(content.size());
    header.push_back('\0');
    std::span<const std::uint8_t> prefix(reinterpret_cast<const std::uint8_t*>(header.data()),
                                         header.size());
    return evp_digest_hex(EVP_sha1(), prefix, content);
}

std::string git_blob_sha1(std::string_view content) {
    return git_blob_sha1(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
}

} // namespace radar
