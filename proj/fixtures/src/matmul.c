/* matmul NI NJ NK <out> [in]: C = A x B over int32, written to <out> as
   little-endian int32 rows. [in] supplies A then B in the same encoding;
   without it both are filled with a fixed pattern. */
#include "procwasm.h"

static void matmul(int NI, int NJ, int NK, int* C, const int* A, const int* B) {
  for (int i = 0; i < NI; i++) {
    for (int k = 0; k < NK; k++) {
      for (int j = 0; j < NJ; j++) {
        C[i * NJ + j] += A[i * NK + k] * B[k * NJ + j];
      }
    }
  }
}

static int read_full(int fd, void* dst, size_t len) {
  char* p = dst;
  while (len > 0) {
    i64 n = sys_read(fd, p, len);
    if (n <= 0) return -1;
    p += n;
    len -= (size_t)n;
  }
  return 0;
}

int main(int argc, char** argv) {
  if (argc < 5) {
    put_str(2, "usage: matmul NI NJ NK <out> [in]\n");
    return 2;
  }
  int NI = (int)atol(argv[1]), NJ = (int)atol(argv[2]), NK = (int)atol(argv[3]);
  if (NI <= 0 || NJ <= 0 || NK <= 0) return 2;
  int* A = malloc(sizeof(int) * NI * NK);
  int* B = malloc(sizeof(int) * NK * NJ);
  int* C = malloc(sizeof(int) * NI * NJ);
  if (!A || !B || !C) return 3;
  memset(C, 0, sizeof(int) * NI * NJ);

  if (argc > 5) {
    int fd = sys_open(argv[5], O_RDONLY);
    if (fd < 0 || read_full(fd, A, sizeof(int) * NI * NK) < 0 || read_full(fd, B, sizeof(int) * NK * NJ) < 0) {
      put_str(2, "matmul: bad input\n");
      return 1;
    }
    sys_close(fd);
  } else {
    for (int i = 0; i < NI; i++)
      for (int k = 0; k < NK; k++) A[i * NK + k] = (i * 7 + k * 3) % 17 - 8;
    for (int k = 0; k < NK; k++)
      for (int j = 0; j < NJ; j++) B[k * NJ + j] = (k * 5 + j * 11) % 13 - 6;
  }

  matmul(NI, NJ, NK, C, A, B);

  int out = sys_open(argv[4], O_WRONLY | O_CREAT | O_TRUNC);
  if (out < 0) return 1;
  if (write_all(out, C, sizeof(int) * NI * NJ) < 0) return 1;
  return sys_close(out) < 0;
}
