/* Minimal guest C library for the procwasm kernel ABI. */
#pragma once

typedef __SIZE_TYPE__ size_t;
typedef long long i64;
typedef unsigned int u32;

#define SYS_EXIT 1
#define SYS_READ 3
#define SYS_WRITE 4
#define SYS_OPEN 5
#define SYS_CLOSE 6
#define SYS_WAITPID 7
#define SYS_SEEK 19
#define SYS_PIPE 42
#define SYS_STAT 106
#define SYS_WRITEV 146
#define SYS_SPAWN 400
#define SYS_ARGS_SIZES_GET 401
#define SYS_ARGS_GET 402

#define O_RDONLY 0
#define O_WRONLY 1
#define O_RDWR 2
#define O_CREAT 0x40
#define O_TRUNC 0x200
#define O_APPEND 0x400

#define SEEK_SET 0
#define SEEK_CUR 1
#define SEEK_END 2

struct iovec32 {
  u32 base;
  u32 len;
};

struct stat_record {
  u32 kind;
  u32 reserved;
  i64 size;
};

i64 __syscall(int no, i64 a0, i64 a1, i64 a2, i64 a3, i64 a4, i64 a5)
    __attribute__((import_module("kernel"), import_name("syscall")));

i64 sys_read(int fd, void* buf, size_t len);
i64 sys_write(int fd, const void* buf, size_t len);
i64 sys_writev(int fd, const struct iovec32* iov, int count);
int sys_open(const char* path, int flags);
int sys_close(int fd);
i64 sys_seek(int fd, i64 off, int whence);
int sys_stat(const char* path, struct stat_record* out);
int sys_pipe(int fds[2]);
/* argv_blob holds NUL-terminated strings back to back; stdio holds the
   parent descriptors for the child's 0, 1, 2 (-1 = null device). */
int sys_spawn(const char* path, const char* argv_blob, size_t blob_len, const int stdio[3]);
int sys_waitpid(int pid);
_Noreturn void sys_exit(int code);

void* malloc(size_t n);
void free(void* p);
void* memcpy(void* dst, const void* src, size_t n);
void* memset(void* dst, int c, size_t n);
int memcmp(const void* a, const void* b, size_t n);
size_t strlen(const char* s);
int strcmp(const char* a, const char* b);
long atol(const char* s);

int write_all(int fd, const void* buf, size_t len);
void put_str(int fd, const char* s);
void put_int(int fd, i64 v);
