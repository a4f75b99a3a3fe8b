#include "radar/errors.hpp"

namespace radar {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::not_found: return "NotFound";
    case ErrorKind::transport: return "TransportError";
    case ErrorKind::malformed_document: return "MalformedDocument";
    case ErrorKind::no_sdist: return "NoSdist";
    case ErrorKind::checksum_mismatch: return "ChecksumMismatch";
    case ErrorKind::unsupported_format: return "UnsupportedFormat";
    case ErrorKind::corrupt_archive: return "CorruptArchive";
    case ErrorKind::path_traversal: return "PathTraversal";
    case ErrorKind::not_a_repository: return "NotARepository";
    case ErrorKind::missing_object: return "MissingObject";
    case ErrorKind::empty_inventory: return "EmptyInventory";
    case ErrorKind::degenerate_dataset: return "DegenerateDataset";
    case ErrorKind::single_class: return "SingleClass";
    case ErrorKind::empty_corpus: return "EmptyCorpus";
    case ErrorKind::no_python_files: return "NoPythonFiles";
    case ErrorKind::empty_candidates: return "EmptyCandidates";
    case ErrorKind::gone: return "Gone";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::io: return "IoError";
    }
    return "Error";
}

} // namespace radar
