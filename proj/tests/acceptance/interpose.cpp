// libc replacements for the interposed audit route. Kept free of the headers
// that declare these functions so the definitions need not repeat their
// exception specifications; linkage is by symbol name.
#include <dlfcn.h>

#include <atomic>
#include <cerrno>

#include "interpose_state.hpp"

namespace audit::detail {
std::atomic<bool> armed{false};
std::atomic<long> spawn_calls{0};
std::atomic<long> socket_calls{0};
}  // namespace audit::detail

namespace {

using audit::detail::armed;

template <class Fn>
Fn next(const char* name) {
  return reinterpret_cast<Fn>(dlsym(RTLD_NEXT, name));
}

bool deny(std::atomic<long>& counter) {
  if (!armed.load()) return false;
  ++counter;
  errno = EPERM;
  return true;
}

bool deny_spawn() { return deny(audit::detail::spawn_calls); }
bool deny_socket() { return deny(audit::detail::socket_calls); }

}  // namespace

struct sockaddr;
struct _IO_FILE;

extern "C" {

int fork() {
  if (deny_spawn()) return -1;
  return next<int (*)()>("fork")();
}

// vfork cannot be forwarded through a wrapper frame; fork is equivalent here.
int vfork() {
  if (deny_spawn()) return -1;
  return next<int (*)()>("fork")();
}

int execve(const char* path, char* const argv[], char* const envp[]) {
  if (deny_spawn()) return -1;
  return next<int (*)(const char*, char* const[], char* const[])>("execve")(path, argv, envp);
}

int execv(const char* path, char* const argv[]) {
  if (deny_spawn()) return -1;
  return next<int (*)(const char*, char* const[])>("execv")(path, argv);
}

int execvp(const char* file, char* const argv[]) {
  if (deny_spawn()) return -1;
  return next<int (*)(const char*, char* const[])>("execvp")(file, argv);
}

int execvpe(const char* file, char* const argv[], char* const envp[]) {
  if (deny_spawn()) return -1;
  return next<int (*)(const char*, char* const[], char* const[])>("execvpe")(file, argv, envp);
}

int posix_spawn(int* pid, const char* path, const void* actions, const void* attr, char* const argv[],
                char* const envp[]) {
  if (deny_spawn()) return EPERM;
  return next<int (*)(int*, const char*, const void*, const void*, char* const[], char* const[])>("posix_spawn")(
      pid, path, actions, attr, argv, envp);
}

int posix_spawnp(int* pid, const char* file, const void* actions, const void* attr, char* const argv[],
                 char* const envp[]) {
  if (deny_spawn()) return EPERM;
  return next<int (*)(int*, const char*, const void*, const void*, char* const[], char* const[])>("posix_spawnp")(
      pid, file, actions, attr, argv, envp);
}

int system(const char* command) {
  if (deny_spawn()) return -1;
  return next<int (*)(const char*)>("system")(command);
}

_IO_FILE* popen(const char* command, const char* mode) {
  if (deny_spawn()) return nullptr;
  return next<_IO_FILE* (*)(const char*, const char*)>("popen")(command, mode);
}

int socket(int domain, int type, int protocol) {
  if (deny_socket()) return -1;
  return next<int (*)(int, int, int)>("socket")(domain, type, protocol);
}

int connect(int fd, const sockaddr* addr, unsigned len) {
  if (deny_socket()) return -1;
  return next<int (*)(int, const sockaddr*, unsigned)>("connect")(fd, addr, len);
}

}  // extern "C"
