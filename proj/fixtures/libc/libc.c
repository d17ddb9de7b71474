#include "procwasm.h"

extern unsigned char __heap_base;
static unsigned char* heap_top = &__heap_base;

int main(int argc, char** argv);

i64 sys_read(int fd, void* buf, size_t len) { return __syscall(SYS_READ, fd, (i64)(size_t)buf, len, 0, 0, 0); }

i64 sys_write(int fd, const void* buf, size_t len) {
  return __syscall(SYS_WRITE, fd, (i64)(size_t)buf, len, 0, 0, 0);
}

i64 sys_writev(int fd, const struct iovec32* iov, int count) {
  return __syscall(SYS_WRITEV, fd, (i64)(size_t)iov, count, 0, 0, 0);
}

int sys_open(const char* path, int flags) {
  return (int)__syscall(SYS_OPEN, (i64)(size_t)path, strlen(path), flags, 0, 0, 0);
}

int sys_close(int fd) { return (int)__syscall(SYS_CLOSE, fd, 0, 0, 0, 0, 0); }

i64 sys_seek(int fd, i64 off, int whence) { return __syscall(SYS_SEEK, fd, off, whence, 0, 0, 0); }

int sys_stat(const char* path, struct stat_record* out) {
  return (int)__syscall(SYS_STAT, (i64)(size_t)path, strlen(path), (i64)(size_t)out, 0, 0, 0);
}

int sys_pipe(int fds[2]) { return (int)__syscall(SYS_PIPE, (i64)(size_t)fds, 0, 0, 0, 0, 0); }

int sys_spawn(const char* path, const char* argv_blob, size_t blob_len, const int stdio[3]) {
  return (int)__syscall(SYS_SPAWN, (i64)(size_t)path, strlen(path), (i64)(size_t)argv_blob, blob_len,
                        (i64)(size_t)stdio, 0);
}

int sys_waitpid(int pid) { return (int)__syscall(SYS_WAITPID, pid, 0, 0, 0, 0, 0); }

_Noreturn void sys_exit(int code) {
  __syscall(SYS_EXIT, code, 0, 0, 0, 0, 0);
  __builtin_unreachable();
}

void* malloc(size_t n) {
  size_t addr = ((size_t)heap_top + 15) & ~(size_t)15;
  size_t end = addr + n;
  size_t limit = __builtin_wasm_memory_size(0) * 65536;
  if (end > limit || end < addr) return 0;
  heap_top = (unsigned char*)end;
  return (void*)addr;
}

void free(void* p) { (void)p; }

void* memcpy(void* dst, const void* src, size_t n) {
  unsigned char* d = dst;
  const unsigned char* s = src;
  while (n--) *d++ = *s++;
  return dst;
}

void* memset(void* dst, int c, size_t n) {
  unsigned char* d = dst;
  while (n--) *d++ = (unsigned char)c;
  return dst;
}

int memcmp(const void* a, const void* b, size_t n) {
  const unsigned char* x = a;
  const unsigned char* y = b;
  for (size_t i = 0; i < n; i++) {
    if (x[i] != y[i]) return x[i] < y[i] ? -1 : 1;
  }
  return 0;
}

size_t strlen(const char* s) {
  size_t n = 0;
  while (s[n]) n++;
  return n;
}

int strcmp(const char* a, const char* b) {
  while (*a && *a == *b) a++, b++;
  return (unsigned char)*a - (unsigned char)*b;
}

long atol(const char* s) {
  long sign = 1, v = 0;
  if (*s == '-') sign = -1, s++;
  while (*s >= '0' && *s <= '9') v = v * 10 + (*s++ - '0');
  return sign * v;
}

int write_all(int fd, const void* buf, size_t len) {
  const char* p = buf;
  while (len > 0) {
    i64 n = sys_write(fd, p, len);
    if (n <= 0) return -1;
    p += n;
    len -= (size_t)n;
  }
  return 0;
}

void put_str(int fd, const char* s) { write_all(fd, s, strlen(s)); }

void put_int(int fd, i64 v) {
  char buf[24];
  int i = 23;
  int neg = v < 0;
  unsigned long long u = neg ? -(unsigned long long)v : (unsigned long long)v;
  buf[i] = 0;
  do {
    buf[--i] = (char)('0' + u % 10);
    u /= 10;
  } while (u);
  if (neg) buf[--i] = '-';
  put_str(fd, buf + i);
}

__attribute__((export_name("_start"))) void _start(void) {
  u32 sizes[2];
  if (__syscall(SYS_ARGS_SIZES_GET, (i64)(size_t)sizes, 0, 0, 0, 0, 0) < 0) sys_exit(127);
  char** argv = malloc((sizes[0] + 1) * sizeof(char*));
  char* buf = malloc(sizes[1] ? sizes[1] : 1);
  if (!argv || !buf) sys_exit(127);
  if (__syscall(SYS_ARGS_GET, (i64)(size_t)argv, (i64)(size_t)buf, 0, 0, 0, 0) < 0) sys_exit(127);
  argv[sizes[0]] = 0;
  sys_exit(main((int)sizes[0], argv));
}
