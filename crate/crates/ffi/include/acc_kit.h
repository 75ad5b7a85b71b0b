#ifndef ACC_KIT_H
#define ACC_KIT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes. Values are stable across releases.
typedef enum AccStatus {
  ACC_STATUS_OK = 0,
  // The package was well formed but is not trusted.
  ACC_STATUS_REJECTED = 1,
  // The analysis does not meet the policy.
  ACC_STATUS_POLICY_VIOLATION = 2,
  ACC_STATUS_NULL_ARGUMENT = 3,
  ACC_STATUS_INVALID_UTF8 = 4,
  ACC_STATUS_PARSE = 5,
  ACC_STATUS_BAD_ENTRY = 6,
  ACC_STATUS_UNKNOWN_ID = 7,
  ACC_STATUS_ANALYSIS = 8,
  ACC_STATUS_FORMAT = 9,
  ACC_STATUS_POLICY_DOMAIN = 10,
  ACC_STATUS_PANIC = 11,
} AccStatus;

// An encoded package together with its decoded sections.
typedef struct AccPackage AccPackage;

// A parsed and normalized program.
typedef struct AccProgram AccProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *acc_version(void);

// Message describing the last failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *acc_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void acc_string_free(char *s);

// Parses a program from NUL-terminated source text.
//
// # Safety
// `source` must be a valid C string and `out` a valid pointer.
enum AccStatus acc_program_parse(const char *source, struct AccProgram **out);

// # Safety
// `program` must be NULL or a handle from [`acc_program_parse`] not yet freed.
void acc_program_free(struct AccProgram *program);

// Digest of the normalized program, as `sha256:<hex>`. Returns NULL when
// `program` is NULL.
//
// # Safety
// `program` must be NULL or a live handle.
char *acc_program_digest(const struct AccProgram *program);

// Certifies `program` for `n_entries` entry patterns against an encoded
// policy and stores the resulting package in `out`.
//
// `domain` and `strategy` are ids such as `types-v1` and `textual-fifo`.
// A policy violation returns [`AccStatus::PolicyViolation`] and no package.
//
// # Safety
// Pointers must be valid for the given lengths; `entries` must hold
// `n_entries` C strings.
enum AccStatus acc_certify(const struct AccProgram *program,
                           const char *domain,
                           const char *const *entries,
                           size_t n_entries,
                           const uint8_t *policy,
                           size_t policy_len,
                           const char *strategy,
                           bool reduced,
                           struct AccPackage **out);

// Decodes a package from bytes. The bytes are copied.
//
// # Safety
// `bytes` must be valid for `len` bytes and `out` a valid pointer.
enum AccStatus acc_package_decode(const uint8_t *bytes, size_t len, struct AccPackage **out);

// Encoded bytes of `package`. The buffer belongs to the package and lives
// until it is freed. Returns NULL when `package` is NULL.
//
// # Safety
// `package` must be NULL or a live handle; `len` must be a valid pointer.
const uint8_t *acc_package_encode(const struct AccPackage *package, size_t *len);

// Number of answer entries carried by the package's certificate.
//
// # Safety
// `package` must be a live handle and `out` a valid pointer.
enum AccStatus acc_package_entry_count(const struct AccPackage *package, size_t *out);

// # Safety
// `package` must be NULL or a handle from this library not yet freed.
void acc_package_free(struct AccPackage *package);

// Checks `package` against an encoded policy.
//
// Returns [`AccStatus::Ok`] when trusted and [`AccStatus::Rejected`] when
// not. `strategy` may be NULL to use the certificate's; `n_entries` may be 0
// to use the certificate's entry points. When `report` is not NULL it
// receives the rendered report, to be released with [`acc_string_free`].
//
// # Safety
// Pointers must be valid for the given lengths.
enum AccStatus acc_check(const struct AccPackage *package,
                         const uint8_t *policy,
                         size_t policy_len,
                         const char *strategy,
                         const char *const *entries,
                         size_t n_entries,
                         char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACC_KIT_H */
