#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radar {

enum class ErrorKind {
    not_found,
    transport,
    malformed_document,
    no_sdist,
    checksum_mismatch,
    unsupported_format,
    corrupt_archive,
    path_traversal,
    not_a_repository,
    missing_object,
    empty_inventory,
    degenerate_dataset,
    single_class,
    empty_corpus,
    no_python_files,
    empty_candidates,
    gone,
    invalid_argument,
    io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace radar
