#!/usr/bin/env node
// Interactive SMT-LIB 2 front end backed by the z3-solver WASM distribution.
//
// Reads commands from stdin, evaluates each paren-balanced chunk against a
// persistent Z3 context, and writes the solver's replies to stdout — the same
// pipe protocol as `z3 -in`, so this script can serve as SOLVER_BIN.
//
// The evaluation deliberately uses the synchronous Z3_eval_smtlib2_string
// export. The async wrapper in the z3-solver package marshals the script onto
// the Emscripten stack and returns before the worker thread has read it,
// which corrupts scripts nondeterministically; the sync call consumes its
// argument before returning.
//
// Requires the `z3-solver` npm package (local node_modules, global npm root,
// or /usr/lib/node_modules).

'use strict';

function z3BuiltPath() {
  const candidates = [
    'z3-solver/build/z3-built.js',
    '/usr/lib/node_modules/z3-solver/build/z3-built.js',
    '/usr/local/lib/node_modules/z3-solver/build/z3-built.js',
  ];
  for (const c of candidates) {
    try {
      return require.resolve(c);
    } catch (e) {
      if (e.code !== 'MODULE_NOT_FOUND') throw e;
    }
  }
  process.stderr.write('z3smt: cannot find the z3-solver npm package\n');
  process.exit(2);
}

async function main() {
  const initModule = require(z3BuiltPath());
  const Mod = await initModule();
  const cfg = Mod._Z3_mk_config();
  const ctx = Mod._Z3_mk_context(cfg);

  const evalChunk = (chunk) => {
    if (chunk.indexOf('(exit)') >= 0) {
      process.exit(0);
    }
    let out;
    try {
      out = Mod.ccall(
        'Z3_eval_smtlib2_string',
        'string',
        ['number', 'string'],
        [ctx, chunk]
      );
    } catch (e) {
      out = `(error "${String(e).replace(/"/g, "'")}")\n`;
    }
    if (out && out.trim().length > 0) {
      process.stdout.write(out.endsWith('\n') ? out : out + '\n');
    } else {
      // Silent commands (declarations, assertions) acknowledge with a
      // success line so the caller never blocks on them.
      process.stdout.write('success\n');
    }
  };

  let buf = '';
  let depth = 0;
  process.stdin.setEncoding('utf8');
  process.stdin.on('data', (data) => {
    for (const ch of data) {
      buf += ch;
      if (ch === '(') depth += 1;
      else if (ch === ')') depth -= 1;
      if (depth === 0 && ch === '\n' && buf.trim().length > 0) {
        evalChunk(buf);
        buf = '';
      }
    }
  });
  process.stdin.on('end', () => {
    if (buf.trim().length > 0) {
      evalChunk(buf);
    }
    process.exit(0);
  });
}

main();
