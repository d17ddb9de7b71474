/* pipeline <child> [input]: spawns <child> reading from a pipe, feeds it the
   input file (or stdin) in chunks of varying size, and returns its status. */
#include "procwasm.h"

static char buf[300000];
static const size_t chunk_sizes[] = {1, 7, 4096, 65659, 200000, 333};

int main(int argc, char** argv) {
  if (argc < 2) {
    put_str(2, "usage: pipeline <child> [input]\n");
    return 2;
  }
  int in = 0;
  if (argc > 2) {
    in = sys_open(argv[2], O_RDONLY);
    if (in < 0) {
      put_str(2, "pipeline: cannot open input\n");
      return 1;
    }
  }
  int p[2];
  if (sys_pipe(p) < 0) return 1;
  int stdio[3] = {p[0], 1, 2};
  const char* child = argv[1];
  int pid = sys_spawn(child, child, strlen(child) + 1, stdio);
  if (pid < 0) {
    put_str(2, "pipeline: spawn failed ");
    put_int(2, pid);
    put_str(2, "\n");
    return 1;
  }
  sys_close(p[0]);

  size_t turn = 0;
  for (;;) {
    size_t want = chunk_sizes[turn++ % (sizeof chunk_sizes / sizeof chunk_sizes[0])];
    i64 n = sys_read(in, buf, want);
    if (n < 0) return 1;
    if (n == 0) break;
    if (write_all(p[1], buf, (size_t)n) < 0) {
      put_str(2, "pipeline: write to pipe failed\n");
      return 1;
    }
  }
  sys_close(p[1]);
  return sys_waitpid(pid);
}
