// Regenerates the frozen ESTree documents.
// Usage, from this directory: node generate.js <node_modules dir> <file.js>...
const path = require('path');
const fs = require('fs');
const esprima = require(path.resolve(process.argv[2], 'esprima'));
for (const file of process.argv.slice(3)) {
  const ast = esprima.parseScript(fs.readFileSync(file, 'utf8'), { loc: true, range: true });
  const name = path.relative(path.join(__dirname, '..'), path.resolve(file))
    .replace(/^estree[\/\\]/, '').replace(/^apps[\/\\]/, '').replace(/[\/\\]/g, '_').replace(/\.js$/, '.json');
  fs.writeFileSync(path.join(__dirname, name), JSON.stringify(ast) + '\n');
}
