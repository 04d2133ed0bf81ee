/**
 * Copyright 2026 The treebft Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef _TREEBFT_ERROR_H
#define _TREEBFT_ERROR_H

#include <stdexcept>
#include <string>

namespace treebft {

enum class errc {
    key_not_found,
    scheme_mismatch,
    shape_infeasible,
    insufficient_bins,
    out_of_domain,
    infeasible,
    drained,
    causality_violation,
    fault_budget_exceeded,
    agreement_violation,
    config_error,
};

const char *errc_name(errc code);

class error: public std::runtime_error {
    errc code_;
    std::string detail_;

    public:
    error(errc code, const std::string &what):
        std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code), detail_(what) {}

    errc code() const { return code_; }
    /** The message without the code name prefix. */
    const std::string &detail() const { return detail_; }
};

}

#endif
