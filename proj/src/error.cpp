#include "traject/error.hpp"

namespace traject {

MissingArtifactError::MissingArtifactError(const std::string& path, const std::string& producer)
    : Error("missing " + path + "; run `traject " + producer + "` first"), path_(path) {}

}  // namespace traject
