// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Model server: loads a model spec and answers the NDJSON line protocol on
// stdin/stdout until EOF. The engine's "remote" provider spawns this (or any
// compatible server) as a child process.
#include <cstdio>

#include "thinkrouter.h"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <model-spec.json>\n", argv[0]);
        return 1;
    }
    tr_model* model = nullptr;
    tr_status status = tr_model_open_file(argv[1], &model);
    if (status == TR_OK) status = tr_model_serve_stdio(model);
    tr_model_close(model);
    if (status != TR_OK)
        std::fprintf(stderr, "error (%s): %s\n", tr_status_name(status), tr_last_error());
    return tr_status_exit_code(status);
}
