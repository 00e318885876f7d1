#include "aucns/error.hpp"

namespace aucns {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::EmptyDataset: return "empty-dataset";
        case ErrorKind::Config: return "config";
        case ErrorKind::Sampler: return "sampler";
        case ErrorKind::Training: return "training";
        case ErrorKind::Numerical: return "numerical-degeneracy";
        case ErrorKind::DegenerateDataset: return "degenerate-dataset";
        case ErrorKind::Index: return "index";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace aucns
