#pragma once

#include "lqgame/io.hpp"

#include <string>
#include <vector>

namespace lqgame::schema {

// Validates `instance` against a draft-07 schema restricted to the keywords
// the session schema uses: type, enum, const, properties, required,
// additionalProperties, items, minItems, maxItems, minLength, minimum,
// maximum, exclusiveMinimum, exclusiveMaximum, oneOf, anyOf, allOf and local
// "#/definitions/..." references. Unknown keywords are ignored. Returns one
// message per violation, each prefixed with a JSON pointer.
std::vector<std::string> validate(const io::Json& instance, const io::Json& schema);

// The session schema compiled into the binary.
const io::Json& session_schema();

}  // namespace lqgame::schema
