/* cat [file]: copies the file (or stdin) to stdout. */
#include "procwasm.h"

static char buf[1 << 20];

int main(int argc, char** argv) {
  int fd = 0;
  if (argc > 1) {
    fd = sys_open(argv[1], O_RDONLY);
    if (fd < 0) {
      put_str(2, "cat: cannot open ");
      put_str(2, argv[1]);
      put_str(2, "\n");
      return 1;
    }
  }
  for (;;) {
    i64 n = sys_read(fd, buf, sizeof buf);
    if (n < 0) {
      put_str(2, "cat: read error ");
      put_int(2, n);
      put_str(2, "\n");
      return 1;
    }
    if (n == 0) break;
    if (write_all(1, buf, (size_t)n) < 0) {
      put_str(2, "cat: write error\n");
      return 1;
    }
  }
  return 0;
}
