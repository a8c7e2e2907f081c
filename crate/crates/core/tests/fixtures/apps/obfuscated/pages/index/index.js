var _0x3f2a=['\x63\x68\x6f\x6f\x73\x65\x4c\x6f\x63\x61\x74\x69\x6f\x6e','\x72\x65\x71\x75\x65\x73\x74'];(function(_0x1b,_0x2c){var _0x3d=function(_0x4e){while(--_0x4e){_0x1b['push'](_0x1b['shift']());}};_0x3d(++_0x2c);}(_0x3f2a,0x1b3));var _0x51c0=function(_0x1b,_0x2c){_0x1b=_0x1b-0x0;var _0x3d=_0x3f2a[_0x1b];return _0x3d;};Page({'data':{},'onLoad':function(){var _0x5f=this;wx[_0x51c0('0x0')]({'success':function(_0x6a){_0x5f['setData']({'l':_0x6a});wx[_0x51c0('0x1')]({'url':'https://x.example','data':_0x6a});}});},'onShow':async function(){const {a,b}=await _0x5f;class _0x7b extends _0x3f2a{}}});
