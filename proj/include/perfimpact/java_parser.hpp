#pragma once

#include <string>
#include <string_view>

#include "perfimpact/ast.hpp"

namespace perfimpact {

// Parses a Java subset into an Ast.
//
// Covered: package/import declarations; class, interface, enum and record
// declarations; methods and constructors with parameters; fields and local
// variables; if/else, switch (colon and arrow forms), for, enhanced for,
// while, do-while, return and blocks; binary, unary, conditional and
// assignment expressions; method calls and method references; identifiers
// and integer/float/boolean/char/string/null literals.
//
// Anything else (lambdas, annotations, object creation, try/catch, casts,
// array access, ...) becomes an Unknown node covering its source span, with
// parseable sub-expressions kept as children. A statement or member that
// cannot be parsed at all is wrapped whole as Unknown{construct=unparsed}.
//
// Throws ParseError only when the text cannot be segmented into top-level
// declarations: lexical errors, unbalanced brackets, or a top-level token
// that does not start a package, import or type declaration.
Ast parse_java(std::string_view source, std::string file_path = {});

}  // namespace perfimpact
