/* Decodes a PDU given as hex on argv[1], re-encodes it, steps a small
 * simulator and splits PRBs. Prints one line per step. */
#include <stdio.h>
#include <string.h>
#include "oran.h"

static int hexval(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

int main(int argc, char **argv) {
  if (argc < 2) return 2;
  uint8_t in[4096];
  size_t n = strlen(argv[1]) / 2;
  if (n > sizeof in) return 2;
  for (size_t i = 0; i < n; i++)
    in[i] = (uint8_t)(hexval(argv[1][2 * i]) * 16 + hexval(argv[1][2 * i + 1]));

  OranPdu *pdu = NULL;
  if (oran_pdu_decode(in, n, &pdu) != ORAN_STATUS_OK) {
    printf("decode error: %s\n", oran_last_error());
    return 1;
  }
  printf("procedure %u\n", oran_pdu_procedure_code(pdu));
  size_t need = 0;
  if (oran_pdu_encode(pdu, NULL, 0, &need) != ORAN_STATUS_BUFFER_TOO_SMALL) return 1;
  uint8_t out[4096];
  size_t wrote = 0;
  if (oran_pdu_encode(pdu, out, sizeof out, &wrote) != ORAN_STATUS_OK) return 1;
  printf("roundtrip %s %zu\n", wrote == n && memcmp(in, out, n) == 0 ? "same" : "differs", need);
  oran_pdu_free(pdu);

  if (oran_pdu_decode(in, n - 1, &pdu) != ORAN_STATUS_MALFORMED_PDU) return 1;
  printf("truncated rejected: %s\n", oran_last_error());

  const char *cfg =
      "[[nodes]]\nid = \"gnb-1\"\n"
      "[[cells]]\nid = 1\nnode = \"gnb-1\"\ntotal_prb = 10\n"
      "slices = [{ id = 0, kind = \"embb\", dedicated_prb = 10 }]\n"
      "[[ues]]\nid = 1\ncell = 1\nslice = 0\n"
      "traffic = { kind = \"constant\", bytes_per_tick = 500 }\n";
  OranSim *sim = NULL;
  if (oran_sim_new(cfg, 1, &sim) != ORAN_STATUS_OK) return 1;
  oran_sim_step(sim, 100);
  char *hash = oran_sim_state_hash(sim);
  printf("sim t=%llu hash %.16s\n", (unsigned long long)oran_sim_now(sim), hash);
  oran_string_free(hash);
  oran_sim_free(sim);

  uint32_t demand[3] = {20, 30, 15}, split[3];
  if (oran_baseline_split(demand, 3, 50, split) != ORAN_STATUS_OK) return 1;
  printf("split %u %u %u\n", split[0], split[1], split[2]);
  return 0;
}
