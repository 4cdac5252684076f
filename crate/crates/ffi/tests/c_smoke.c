#include <stdio.h>
#include <string.h>
#include "edram_dcr.h"

static const char *CONFIG =
    "schemes = [\"baseline\", \"sram\", \"rpv\", \"dcr\"]\n"
    "[controller]\ninterval_instructions = 200000\n"
    "[trace]\ninterval_instructions = 200000\n"
    "[trace.synthetic]\nrng_seed = 1\naccesses_per_kilo_instr = 20.0\n"
    "[[trace.synthetic.phase]]\ninstruction_count = 1000000\nworking_set_bytes = 65536\n";

int main(void) {
    uint32_t colors = 0;
    if (edr_color_count(2u << 20, 8, 64, 4096, &colors) != EDR_STATUS_OK || colors != 64) {
        fprintf(stderr, "color count %u\n", colors);
        return 1;
    }
    EdrConfig *cfg = NULL;
    if (edr_config_parse(CONFIG, NULL, &cfg) != EDR_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", edr_last_error());
        return 1;
    }
    EdrComparison *cmp = NULL;
    if (edr_compare(cfg, &cmp) != EDR_STATUS_OK) {
        fprintf(stderr, "compare: %s\n", edr_last_error());
        return 1;
    }
    double saving = 0.0;
    edr_comparison_metric(cmp, EDR_SCHEME_DCR, EDR_METRIC_ENERGY_SAVING_PCT, &saving);
    char *json = NULL;
    edr_comparison_to_json(cmp, &json);
    int ok = saving > 0.0 && json != NULL && strstr(json, "\"dcr\"") != NULL;
    printf("dcr saving %.3f%%\n", saving);
    edr_string_free(json);
    edr_comparison_free(cmp);
    edr_config_free(cfg);
    return ok ? 0 : 1;
}
