/* append_stress <path> <n>: appends n single bytes to path. */
#include "procwasm.h"

int main(int argc, char** argv) {
  if (argc < 3) {
    put_str(2, "usage: append_stress <path> <n>\n");
    return 2;
  }
  long n = atol(argv[2]);
  int fd = sys_open(argv[1], O_WRONLY | O_CREAT | O_TRUNC | O_APPEND);
  if (fd < 0) return 1;
  for (long i = 0; i < n; i++) {
    char c = (char)('a' + i % 26);
    if (sys_write(fd, &c, 1) != 1) return 1;
  }
  return sys_close(fd) < 0;
}
